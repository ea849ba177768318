//! Experiment drivers: oracle-judged stability comparison and batched
//! policy episodes.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use rayon::prelude::*;

use crate::datasets::{generate, ItemSequence, SequenceKind, SequenceSpec};
use crate::geometry::GridSpec;
use crate::protocol::ExternalAgent;
use crate::env::{orientation_maps, Action, EnvConfig, EnvState, EpisodeResult, RewardBreakdown};
use crate::error::{Error, Result};
use crate::oracle::{build_contacts, Feasibility, StabilityVerdict};
use crate::Oracle;
use crate::policies::{builtin, random_stable, Policy, PolicyKind};
use crate::scene::Scene;
use crate::stability::CheckerMode;

/// Seed offset separating the placement stream from the item stream.
const POLICY_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;

/// Judges the newest box of `scene`, assuming every earlier box was already
/// stable.
fn judge_scene(oracle: &Oracle, scene: &Scene) -> Result<Feasibility> {
    Ok(oracle.feasibility(&build_contacts(scene.boxes())?))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacementVerdict {
    pub step: usize,
    pub stable: bool,
    pub first_infeasible: Option<usize>,
}

/// Outcome of random stable placements under one checker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeReport {
    pub mode: CheckerMode,
    pub placements: usize,
    pub falls: usize,
    /// Falls whose solve was numerically degenerate (counted as falls).
    pub degenerate: usize,
    pub bins: usize,
    /// Items that fit no orientation even in an empty bin.
    pub skipped: usize,
    /// Anchors accepted by CHα but not by CH1, over every visited state.
    pub subset_violations: usize,
    pub verdicts: Vec<PlacementVerdict>,
    #[serde(skip)]
    pub seconds: f64,
}

impl ModeReport {
    pub fn fall_rate(&self) -> f64 {
        if self.placements == 0 {
            0.0
        } else {
            self.falls as f64 / self.placements as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub ch1: ModeReport,
    pub cha: ModeReport,
}

impl CompareReport {
    /// Fall count and rate per mode plus wall-clock seconds.
    pub fn table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{:<8} {:>10} {:>6} {:>9} {:>10}\n",
            "method", "placements", "falls", "rate", "seconds"
        ));
        for r in [&self.ch1, &self.cha] {
            out.push_str(&format!(
                "{:<8} {:>10} {:>6} {:>8.2}% {:>10.1}\n",
                r.mode.name(),
                r.placements,
                r.falls,
                100.0 * r.fall_rate(),
                r.seconds
            ));
        }
        out
    }
}

/// Places every item of `seq` at a uniformly random stable action under
/// `mode` and judges the scene after each placement. A fallen item is
/// removed again so later placements start from a stable scene. When an item
/// has no stable action the bin is closed and a fresh one is started.
///
/// With `check_subset`, both checkers are evaluated on every visited state
/// and anchors accepted by CHα but not CH1 are counted.
pub fn random_placements(seq: &ItemSequence, mode: CheckerMode, seed: u64, check_subset: bool) -> Result<ModeReport> {
    let start = Instant::now();
    let oracle = Oracle::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ POLICY_STREAM);
    let mut scene = Scene::new(seq.grid);
    let mut report = ModeReport {
        mode,
        placements: 0,
        falls: 0,
        degenerate: 0,
        bins: if seq.is_empty() { 0 } else { 1 },
        skipped: 0,
        subset_violations: 0,
        verdicts: Vec::with_capacity(seq.len()),
        seconds: 0.0,
    };
    for i in 0..seq.len() {
        let gd = seq.grid_dims(i);
        loop {
            let (hm, em) = (scene.heightmap(), scene.empty_map());
            let maps = orientation_maps(hm, em, gd, mode);
            if check_subset {
                let other = match mode {
                    CheckerMode::ConvexHull1 => CheckerMode::ConvexHullAlpha,
                    CheckerMode::ConvexHullAlpha => CheckerMode::ConvexHull1,
                };
                let others = orientation_maps(hm, em, gd, other);
                let (ch1, cha) = match mode {
                    CheckerMode::ConvexHull1 => (&maps, &others),
                    CheckerMode::ConvexHullAlpha => (&others, &maps),
                };
                for (a, b) in cha.iter().zip(ch1) {
                    report.subset_violations += a.anchors().filter(|&(x, y)| !b.is_stable(x, y)).count();
                }
            }
            let Some(action) = random_stable(&maps, &mut rng) else {
                if scene.boxes().is_empty() {
                    report.skipped += 1;
                    break;
                }
                scene = Scene::new(seq.grid);
                report.bins += 1;
                continue;
            };
            let od = action.orientation.apply(gd);
            let before = scene.clone();
            scene.place((action.x, action.y), od)?;
            let step = report.placements;
            report.placements += 1;
            let feasibility = judge_scene(&oracle, &scene)?;
            let stable = feasibility == Feasibility::Stable;
            if !stable {
                report.falls += 1;
                if matches!(feasibility, Feasibility::Degenerate(_)) {
                    report.degenerate += 1;
                }
                report.verdicts.push(PlacementVerdict {
                    step,
                    stable,
                    first_infeasible: Some(scene.boxes().len() - 1),
                });
                scene = before;
            } else {
                report.verdicts.push(PlacementVerdict {
                    step,
                    stable,
                    first_infeasible: None,
                });
            }
            break;
        }
    }
    report.seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Runs both checkers on the same items and placement seed, in parallel.
pub fn compare_stability(seq: &ItemSequence, seed: u64, check_subset: bool) -> Result<CompareReport> {
    let (ch1, cha) = rayon::join(
        || random_placements(seq, CheckerMode::ConvexHull1, seed, check_subset),
        || random_placements(seq, CheckerMode::ConvexHullAlpha, seed, check_subset),
    );
    Ok(CompareReport { ch1: ch1?, cha: cha? })
}

/// One recorded step of an episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub action: Action,
    pub reward: RewardBreakdown,
    pub placed_voxels: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRun {
    pub result: EpisodeResult,
    pub steps: Vec<StepRecord>,
    pub verdicts: Vec<StabilityVerdict>,
    pub bin_voxels: u64,
    /// Set when the episode was cut short by a policy or transport failure.
    pub error: Option<String>,
}

impl EpisodeRun {
    /// Placeholder for an episode that could not start.
    pub fn failed(seq: &ItemSequence, error: String) -> Self {
        Self {
            result: EpisodeResult {
                utilization: 0.0,
                items_placed: 0,
                termination: None,
                wasted_fraction: 0.0,
                rewards: Vec::new(),
                volume_std: seq.volume_std(),
                falls: 0,
            },
            steps: Vec::new(),
            verdicts: Vec::new(),
            bin_voxels: seq.grid.bin_voxels(),
            error: Some(error),
        }
    }
}

/// Drives one episode with `policy`, then judges every placement with the
/// oracle. A policy error other than "no action" ends the episode and is
/// recorded; a rejected action terminates it.
pub fn run_episode(
    seq: &ItemSequence,
    policy: &mut dyn Policy,
    config: EnvConfig,
    judge: bool,
) -> Result<EpisodeRun> {
    let mut state = EnvState::reset(seq.grid, seq.clone(), config)?;
    let mut steps = Vec::new();
    let mut error = None;
    while !state.is_done() {
        let action = match policy.act(&state) {
            Ok(a) => a,
            Err(Error::NoAction) => break,
            Err(e) => {
                error = Some(e.to_string());
                break;
            }
        };
        match state.step(action) {
            Ok((reward, _)) => steps.push(StepRecord {
                action,
                reward,
                placed_voxels: state.placed_voxels(),
            }),
            Err(e @ Error::RejectedAction { .. }) => {
                error = Some(e.to_string());
                state.terminate_rejected();
            }
            Err(e) => return Err(e),
        }
    }
    let verdicts = if judge {
        Oracle::default().settle_check(state.scene().boxes())?
    } else {
        Vec::new()
    };
    let bin_voxels = state.spec().bin_voxels();
    let falls = verdicts.iter().filter(|v| !v.stable).count();
    let result = EpisodeResult {
        utilization: state.utilization(),
        items_placed: steps.len(),
        termination: state.termination(),
        wasted_fraction: state.wasted_voxels() as f64 / bin_voxels as f64,
        rewards: steps.iter().map(|s| s.reward).collect(),
        volume_std: seq.volume_std(),
        falls,
    };
    Ok(EpisodeRun {
        result,
        steps,
        verdicts,
        bin_voxels,
        error,
    })
}

/// Worker pool honoring `PACKBENCH_THREADS` when set to a positive integer.
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = std::env::var("PACKBENCH_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::Protocol(format!("cannot start worker pool: {e}")))
}

/// Everything needed to reproduce a batch of episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub grid: GridSpec,
    pub kind: SequenceKind,
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub policy: PolicyKind,
    pub checker: CheckerMode,
    pub episodes: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub agent_cmd: Option<String>,
    /// Judge every placement with the equilibrium oracle.
    pub judge: bool,
}

impl ExperimentConfig {
    /// Item sequence of episode `index`; seeds are consecutive from `seed`.
    pub fn sequence(&self, index: usize) -> Result<ItemSequence> {
        generate(&SequenceSpec {
            kind: self.kind,
            seed: self.seed.wrapping_add(index as u64),
            count: self.count,
            min: self.min,
            max: self.max,
            grid: self.grid,
        })
    }

    fn run_one(&self, index: usize) -> Result<EpisodeRun> {
        let seq = self.sequence(index)?;
        let env = EnvConfig {
            mode: self.checker,
            ..EnvConfig::default()
        };
        let policy_seed = self.seed.wrapping_add(index as u64) ^ POLICY_STREAM;
        if let Some(mut policy) = builtin(self.policy, policy_seed) {
            return run_episode(&seq, policy.as_mut(), env, self.judge);
        }
        let command = self
            .agent_cmd
            .as_deref()
            .ok_or_else(|| Error::Transport("external policy needs an agent command".into()))?;
        let mut agent = match ExternalAgent::spawn(command) {
            Ok(a) => a,
            Err(e) => return Ok(EpisodeRun::failed(&seq, e.to_string())),
        };
        let run = run_episode(&seq, &mut agent, env, self.judge)?;
        let _ = agent.end_episode(run.result.utilization);
        let _ = agent.close();
        Ok(run)
    }
}

/// Runs every episode of `config` on the worker pool; results are in episode
/// order regardless of scheduling.
pub fn run_batch(config: &ExperimentConfig) -> Result<Vec<EpisodeRun>> {
    let pool = thread_pool()?;
    pool.install(|| {
        (0..config.episodes)
            .into_par_iter()
            .map(|i| config.run_one(i))
            .collect()
    })
}

/// Mean, median and the utilization/volume-std correlation over episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub episodes: usize,
    pub mean_utilization: f64,
    pub median_utilization: f64,
    pub total_falls: usize,
    pub failed_episodes: usize,
    /// Pearson correlation between utilization and item-volume std; absent
    /// when either series is constant.
    pub std_correlation: Option<f64>,
    pub pairs: Vec<(f64, f64)>,
}

pub fn pearson(pairs: &[(f64, f64)]) -> Option<f64> {
    let n = pairs.len() as f64;
    if pairs.len() < 2 {
        return None;
    }
    let (mx, my) = pairs
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x / n, b + y / n));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

pub fn aggregate(runs: &[EpisodeRun]) -> Aggregate {
    let utils: Vec<f64> = runs.iter().map(|r| r.result.utilization).collect();
    let mut sorted = utils.clone();
    sorted.sort_by(f64::total_cmp);
    let median = match sorted.len() {
        0 => 0.0,
        n if n % 2 == 1 => sorted[n / 2],
        n => (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0,
    };
    let mean = if utils.is_empty() {
        0.0
    } else {
        utils.iter().sum::<f64>() / utils.len() as f64
    };
    let pairs: Vec<(f64, f64)> = runs
        .iter()
        .map(|r| (r.result.utilization, r.result.volume_std))
        .collect();
    Aggregate {
        episodes: runs.len(),
        mean_utilization: mean,
        median_utilization: median,
        total_falls: runs.iter().map(|r| r.result.falls).sum(),
        failed_episodes: runs.iter().filter(|r| r.error.is_some()).count(),
        std_correlation: pearson(&pairs),
        pairs,
    }
}
