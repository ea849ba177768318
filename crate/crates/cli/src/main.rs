use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use packbench::datasets::{generate, load_sequence, save_sequence, ItemSequence, SequenceKind, SequenceSpec};
use packbench::env::{Action, EnvConfig, EnvState};
use packbench::geometry::{GridSpec, Orientation, DEFAULT_RESOLUTION};
use packbench::mapio::{write_bool_pgm, write_pgm};
use packbench::policies::PolicyKind;
use packbench::protocol::Server;
use packbench::runner::{aggregate, compare_stability, run_batch, ExperimentConfig};
use packbench::stability::CheckerMode;
use packbench::trace::{read_trace, write_placement_verdicts, write_trace, write_verdicts, TraceHeader, TRACE_SCHEMA};

/// Exit status when every output was written but some episodes failed.
const EXIT_EPISODE_FAILURES: u8 = 3;

#[derive(Parser)]
#[command(name = "packbench", version, about = "Online 3D bin packing benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an item sequence file.
    Gen(GenArgs),
    /// Random stable placements under CH1 and CHα, judged by the oracle.
    #[command(alias = "compare-stability")]
    Compare(CompareArgs),
    /// Run policy episodes and write traces plus an aggregate report.
    Run(RunArgs),
    /// Render heightmap, empty map and stable maps as PGM images.
    Render(RenderArgs),
    /// Serve the environment protocol on stdin/stdout.
    Serve,
}

#[derive(Args, Clone)]
struct BinArgs {
    /// Bin width, depth and height in meters.
    #[arg(long, num_args = 3, value_names = ["W", "D", "H"], default_values_t = [0.6, 0.6, 0.6])]
    bin: Vec<f64>,
    /// Voxel edge length in meters.
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    resolution: f64,
}

impl BinArgs {
    fn grid(&self) -> anyhow::Result<GridSpec> {
        Ok(GridSpec::new(self.bin[0], self.bin[1], self.bin[2], self.resolution)?)
    }
}

#[derive(Args, Clone)]
struct ItemArgs {
    #[arg(long, default_value = "rs")]
    kind: SequenceKind,
    #[arg(long, default_value_t = 100)]
    count: usize,
    /// Smallest item side in meters.
    #[arg(long, default_value_t = 0.03)]
    min: f64,
    /// Largest item side in meters.
    #[arg(long, default_value_t = 0.3)]
    max: f64,
}

#[derive(Args)]
struct GenArgs {
    #[command(flatten)]
    bin: BinArgs,
    #[command(flatten)]
    items: ItemArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Sequence file to place; generated from the item flags when omitted.
    #[arg(long)]
    input: Option<PathBuf>,
    #[command(flatten)]
    bin: BinArgs,
    #[arg(long, default_value_t = 0.03)]
    min: f64,
    #[arg(long, default_value_t = 0.3)]
    max: f64,
    #[arg(long, default_value_t = 3000)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also count anchors accepted by CHα but rejected by CH1 (doubles the map work).
    #[arg(long)]
    check_subset: bool,
    /// Directory for the JSON report and per-mode verdict files.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    bin: BinArgs,
    #[command(flatten)]
    items: ItemArgs,
    #[arg(long, default_value = "random")]
    policy: PolicyKind,
    #[arg(long, default_value = "cha")]
    checker: CheckerMode,
    #[arg(long, default_value_t = 10)]
    episodes: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Agent command line for the external policy, run through `sh -c`.
    #[arg(long)]
    agent_cmd: Option<String>,
    /// Skip the equilibrium oracle.
    #[arg(long)]
    no_judge: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RenderArgs {
    /// Sequence file of the episode.
    #[arg(long)]
    sequence: PathBuf,
    /// Trace whose first `step` actions are replayed; empty bin when omitted.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    step: usize,
    #[arg(long, default_value = "cha")]
    checker: CheckerMode,
    #[arg(long)]
    out: PathBuf,
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    ))
}

fn read_sequence(path: &Path) -> anyhow::Result<ItemSequence> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    load_sequence(BufReader::new(file)).with_context(|| format!("cannot read {}", path.display()))
}

fn cmd_gen(args: GenArgs) -> anyhow::Result<()> {
    let spec = SequenceSpec {
        kind: args.items.kind,
        seed: args.seed,
        count: args.items.count,
        min: args.items.min,
        max: args.items.max,
        grid: args.bin.grid()?,
    };
    let seq = generate(&spec)?;
    match &args.out {
        Some(path) => {
            let mut out = create(path)?;
            save_sequence(&mut out, &seq)?;
            out.flush()?;
        }
        None => {
            let mut out = io::stdout().lock();
            save_sequence(&mut out, &seq)?;
        }
    }
    let volume: f64 = seq.dims().map(|d| d.volume()).sum();
    let voxels: u64 = (0..seq.len()).map(|i| seq.grid_dims(i).volume()).sum();
    eprintln!(
        "{} {} items, volume {:.6} m^3 ({} voxels, {:.4} of the bin), volume std {:.6}",
        seq.len(),
        seq.kind.name(),
        volume,
        voxels,
        voxels as f64 / seq.grid.bin_voxels() as f64,
        seq.volume_std()
    );
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> anyhow::Result<()> {
    let seq = match &args.input {
        Some(path) => read_sequence(path)?,
        None => generate(&SequenceSpec::rs(args.seed, args.count, args.min, args.max, args.bin.grid()?))?,
    };
    let report = compare_stability(&seq, args.seed, args.check_subset)?;
    print!("{}", report.table());
    if args.check_subset {
        println!(
            "subset violations: ch1 run {}, cha run {}",
            report.ch1.subset_violations, report.cha.subset_violations
        );
    }
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        let mut out = create(&dir.join("report.json"))?;
        let modes: Vec<_> = [&report.ch1, &report.cha]
            .iter()
            .map(|r| {
                json!({
                    "mode": r.mode,
                    "placements": r.placements,
                    "falls": r.falls,
                    "fall_rate": r.fall_rate(),
                    "degenerate": r.degenerate,
                    "bins": r.bins,
                    "skipped": r.skipped,
                    "subset_violations": r.subset_violations,
                })
            })
            .collect();
        let summary = json!({"seed": args.seed, "items": seq.len(), "modes": modes});
        serde_json::to_writer_pretty(&mut out, &summary)?;
        writeln!(out)?;
        out.flush()?;
        for r in [&report.ch1, &report.cha] {
            let mut out = create(&dir.join(format!("verdicts_{}.jsonl", r.mode.name())))?;
            write_placement_verdicts(&mut out, json!({"mode": r.mode, "seed": args.seed}), &r.verdicts)?;
            out.flush()?;
        }
    }
    Ok(())
}

/// Returns the number of failed episodes.
fn cmd_run(args: RunArgs) -> anyhow::Result<usize> {
    if args.policy == PolicyKind::External && args.agent_cmd.is_none() {
        bail!("--policy external needs --agent-cmd");
    }
    let config = ExperimentConfig {
        grid: args.bin.grid()?,
        kind: args.items.kind,
        count: args.items.count,
        min: args.items.min,
        max: args.items.max,
        policy: args.policy,
        checker: args.checker,
        episodes: args.episodes,
        seed: args.seed,
        agent_cmd: args.agent_cmd.clone(),
        judge: !args.no_judge,
    };
    // Fail on bad bounds before any worker starts.
    if config.episodes > 0 {
        config.sequence(0)?;
    }
    let runs = run_batch(&config)?;
    let dir = &args.out;
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    for (i, run) in runs.iter().enumerate() {
        let seq = config.sequence(i)?;
        let mut out = create(&dir.join(format!("episode_{i:04}.pbseq")))?;
        save_sequence(&mut out, &seq)?;
        out.flush()?;
        let header = TraceHeader {
            schema: TRACE_SCHEMA.into(),
            episode: i,
            seed: seq.seed,
            policy: config.policy.name().into(),
            checker: config.checker.name().into(),
            kind: config.kind.name().into(),
            items: seq.len(),
            bin_voxels: run.bin_voxels,
        };
        let mut out = create(&dir.join(format!("episode_{i:04}.pbtrace")))?;
        write_trace(&mut out, &header, run)?;
        out.flush()?;
        if config.judge {
            let mut out = create(&dir.join(format!("episode_{i:04}.pbverdict")))?;
            write_verdicts(&mut out, json!({"episode": i, "seed": seq.seed}), &run.verdicts)?;
            out.flush()?;
        }
        if let Some(e) = &run.error {
            eprintln!("episode {i}: {e}");
        }
    }
    let agg = aggregate(&runs);
    let mut out = create(&dir.join("report.json"))?;
    let episodes: Vec<_> = runs
        .iter()
        .enumerate()
        .map(|(i, r)| {
            json!({
                "episode": i,
                "utilization": r.result.utilization,
                "items_placed": r.result.items_placed,
                "termination": r.result.termination,
                "wasted_fraction": r.result.wasted_fraction,
                "volume_std": r.result.volume_std,
                "falls": r.result.falls,
                "error": r.error,
            })
        })
        .collect();
    serde_json::to_writer_pretty(
        &mut out,
        &json!({"config": config, "aggregate": agg, "episodes": episodes}),
    )?;
    writeln!(out)?;
    out.flush()?;
    let mut csv = create(&dir.join("utilization_vs_std.csv"))?;
    writeln!(csv, "episode,utilization,volume_std")?;
    for (i, (u, s)) in agg.pairs.iter().enumerate() {
        writeln!(csv, "{i},{u},{s}")?;
    }
    csv.flush()?;
    println!(
        "{} episodes, policy {}, checker {}: mean utilization {:.4}, median {:.4}, falls {}, failed {}, corr(utilization, volume std) {}",
        agg.episodes,
        config.policy.name(),
        config.checker.name(),
        agg.mean_utilization,
        agg.median_utilization,
        agg.total_falls,
        agg.failed_episodes,
        agg.std_correlation
            .map_or_else(|| "n/a".to_string(), |c| format!("{c:.4}"))
    );
    Ok(agg.failed_episodes)
}

fn cmd_render(args: RenderArgs) -> anyhow::Result<()> {
    let seq = read_sequence(&args.sequence)?;
    let actions: Vec<Action> = match &args.trace {
        Some(path) => {
            let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
            let (_, steps) = read_trace(BufReader::new(file))?;
            steps
                .iter()
                .map(|s| {
                    Orientation::new(s.action.o)
                        .map(|o| Action::new(o, s.action.x, s.action.y))
                        .with_context(|| format!("step {}: bad orientation {}", s.step, s.action.o))
                })
                .collect::<anyhow::Result<_>>()?
        }
        None => Vec::new(),
    };
    if args.step > actions.len() {
        bail!(
            "step {} is past the end of the trace ({} steps)",
            args.step,
            actions.len()
        );
    }
    let config = EnvConfig {
        mode: args.checker,
        ..EnvConfig::default()
    };
    let mut state = EnvState::reset(seq.grid, seq.clone(), config)?;
    for (i, &a) in actions[..args.step].iter().enumerate() {
        state
            .step(a)
            .with_context(|| format!("replaying step {i}"))?;
    }
    fs::create_dir_all(&args.out).with_context(|| format!("cannot create {}", args.out.display()))?;
    let nz = state.heightmap().nz();
    let mut out = create(&args.out.join("heightmap.pgm"))?;
    write_pgm(&mut out, state.heightmap().grid(), nz)?;
    out.flush()?;
    let mut out = create(&args.out.join("empty.pgm"))?;
    write_pgm(&mut out, state.empty_map().grid(), nz)?;
    out.flush()?;
    if let Some(maps) = state.maps() {
        for (o, map) in maps.iter().enumerate() {
            let mut out = create(&args.out.join(format!("stable_o{o}.pgm")))?;
            write_bool_pgm(&mut out, map.grid())?;
            out.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a).map(|_| 0),
        Command::Compare(a) => cmd_compare(a).map(|_| 0),
        Command::Run(a) => cmd_run(a).map(|failed| if failed > 0 { EXIT_EPISODE_FAILURES } else { 0 }),
        Command::Render(a) => cmd_render(a).map(|_| 0),
        Command::Serve => Server::new()
            .serve(io::stdin().lock(), io::stdout().lock())
            .map(|_| 0)
            .map_err(Into::into),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
