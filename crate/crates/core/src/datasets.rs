//! Item sequences: random-size (RS) and cut-based perfectly packable (CUT)
//! generators, and the `PBSEQ v1` JSON-lines file format.
//!
//! File layout: one header object, then one object per item.
//!
//! ```text
//! {"schema":"PBSEQ v1","kind":"cut2","seed":7,"bin":[0.6,0.6,0.6],"resolution":0.005,"count":2,"min":0.3,"max":0.6}
//! {"w":0.3,"d":0.6,"h":0.6,"pos":[0,0,0]}
//! {"w":0.3,"d":0.6,"h":0.6,"pos":[60,0,0]}
//! ```
//!
//! `pos` (voxel anchor and rest height) is present only for cut sequences and
//! records where the piece sits in the perfect packing, in its stored
//! orientation.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{cells_ceil, cells_floor, BoxDims, GridDims, GridSpec, Orientation};

pub const SEQ_SCHEMA: &str = "PBSEQ v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SequenceKind {
    Rs,
    Cut1,
    Cut2,
}

impl SequenceKind {
    pub fn name(self) -> &'static str {
        match self {
            SequenceKind::Rs => "rs",
            SequenceKind::Cut1 => "cut1",
            SequenceKind::Cut2 => "cut2",
        }
    }
}

impl std::str::FromStr for SequenceKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "rs" => Ok(SequenceKind::Rs),
            "cut1" | "cut-1" => Ok(SequenceKind::Cut1),
            "cut2" | "cut-2" => Ok(SequenceKind::Cut2),
            other => Err(format!("unknown sequence kind '{other}' (expected rs, cut1 or cut2)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SequenceSpec {
    pub kind: SequenceKind,
    pub seed: u64,
    /// Item count for RS; target piece count for CUT.
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub grid: GridSpec,
}

impl SequenceSpec {
    pub fn rs(seed: u64, count: usize, min: f64, max: f64, grid: GridSpec) -> Self {
        Self {
            kind: SequenceKind::Rs,
            seed,
            count,
            min,
            max,
            grid,
        }
    }

    fn check_bounds(&self) -> Result<()> {
        let g = &self.grid;
        let largest = g.bin_w.max(g.bin_d).max(g.bin_h);
        if !(self.min > 0.0) || !(self.min <= self.max) || self.max > largest + 1e-12 {
            return Err(Error::InvalidBounds(format!(
                "need 0 < min <= max <= {largest}, got [{}, {}]",
                self.min, self.max
            )));
        }
        Ok(())
    }

    /// Bounds in voxels: `[ceil(min), max(ceil(min), floor(max))]`.
    pub fn cell_bounds(&self) -> (u32, u32) {
        let lo = cells_ceil(self.min, self.grid.resolution).max(1);
        let hi = cells_floor(self.max, self.grid.resolution).max(lo);
        (lo, hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub dims: BoxDims,
    /// Voxel position `(x, y, z)` in the recorded perfect packing.
    pub pos: Option<(usize, usize, u32)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ItemSequence {
    pub kind: SequenceKind,
    pub seed: u64,
    pub grid: GridSpec,
    pub min: f64,
    pub max: f64,
    pub items: Vec<Item>,
}

impl ItemSequence {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn dims(&self) -> impl Iterator<Item = BoxDims> + '_ {
        self.items.iter().map(|i| i.dims)
    }

    /// Population standard deviation of item volumes, in cubic meters.
    pub fn volume_std(&self) -> f64 {
        let n = self.items.len();
        if n == 0 {
            return 0.0;
        }
        let vols: Vec<f64> = self.dims().map(|d| d.volume()).collect();
        let mean = vols.iter().sum::<f64>() / n as f64;
        (vols.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt()
    }

    pub fn grid_dims(&self, index: usize) -> GridDims {
        let r = self.grid.resolution;
        let d = self.items[index].dims;
        GridDims::new(cells_ceil(d.w, r), cells_ceil(d.d, r), cells_ceil(d.h, r))
    }
}

fn cells_to_m(cells: u32, resolution: f64) -> f64 {
    cells as f64 * resolution
}

/// RS sequence: every dimension is drawn uniformly from the voxel counts in
/// `[min, max]` (a uniform draw snapped up to the grid with equal weight per
/// cell). Items that fit no orientation are redrawn.
pub fn gen_rs(spec: &SequenceSpec) -> Result<ItemSequence> {
    spec.check_bounds()?;
    let g = &spec.grid;
    let (lo, hi) = spec.cell_bounds();
    let smallest = g.nx.min(g.ny).min(g.nz) as u32;
    if lo > smallest {
        return Err(Error::InvalidBounds(format!(
            "minimum dimension {} m exceeds the smallest bin side",
            spec.min
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut items = Vec::with_capacity(spec.count);
    while items.len() < spec.count {
        let gd = GridDims::new(rng.gen_range(lo..=hi), rng.gen_range(lo..=hi), rng.gen_range(lo..=hi));
        if !Orientation::ALL.iter().any(|o| o.apply(gd).fits(g)) {
            continue;
        }
        items.push(Item {
            dims: gd.to_meters(g.resolution),
            pos: None,
        });
    }
    Ok(ItemSequence {
        kind: SequenceKind::Rs,
        seed: spec.seed,
        grid: *g,
        min: spec.min,
        max: spec.max,
        items,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Piece {
    pos: [u32; 3],
    size: [u32; 3],
}

/// True if `len` splits into parts each within `[lo, hi]`.
fn partitionable(len: u32, lo: u32, hi: u32) -> bool {
    let k_min = len.div_ceil(hi);
    k_min * lo <= len
}

fn cut_positions(len: u32, lo: u32, hi: u32) -> Vec<u32> {
    if len < 2 * lo {
        return Vec::new();
    }
    (lo..=len - lo)
        .filter(|&c| partitionable(c, lo, hi) && partitionable(len - c, lo, hi))
        .collect()
}

fn split(p: Piece, axis: usize, at: u32) -> (Piece, Piece) {
    let mut a = p;
    let mut b = p;
    a.size[axis] = at;
    b.pos[axis] += at;
    b.size[axis] -= at;
    (a, b)
}

/// CUT sequence: recursive guillotine cuts of the whole bin. Pieces longer
/// than `max` along an axis are always cut; afterwards random splittable
/// pieces are cut until `count` pieces exist or nothing can be split.
///
/// CUT1 lists pieces bottom-up by rest height, then `y`, then `x`. CUT2 lists
/// them in a random order in which every piece follows all pieces directly
/// beneath it.
pub fn gen_cut(spec: &SequenceSpec) -> Result<ItemSequence> {
    if spec.kind == SequenceKind::Rs {
        return Err(Error::InvalidBounds("gen_cut needs kind cut1 or cut2".into()));
    }
    spec.check_bounds()?;
    let g = &spec.grid;
    let (lo, hi) = spec.cell_bounds();
    let bin = [g.nx as u32, g.ny as u32, g.nz as u32];
    if let Some(axis) = (0..3).find(|&a| !partitionable(bin[a], lo, hi)) {
        return Err(Error::InvalidBounds(format!(
            "bin side of {} cells on axis {axis} cannot be cut into pieces of {lo}..={hi} cells",
            bin[axis]
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut pending = vec![Piece { pos: [0; 3], size: bin }];
    let mut done: Vec<Piece> = Vec::new();
    while let Some(p) = pending.pop() {
        let forced: Vec<usize> = (0..3).filter(|&a| p.size[a] > hi).collect();
        if forced.is_empty() {
            done.push(p);
            continue;
        }
        let axis = *forced.choose(&mut rng).expect("non-empty");
        let at = *cut_positions(p.size[axis], lo, hi)
            .choose(&mut rng)
            .expect("partitionable sides always have a cut");
        let (a, b) = split(p, axis, at);
        pending.push(a);
        pending.push(b);
    }
    loop {
        if done.len() >= spec.count {
            break;
        }
        let splittable: Vec<usize> = (0..done.len())
            .filter(|&i| (0..3).any(|a| !cut_positions(done[i].size[a], lo, hi).is_empty()))
            .collect();
        let Some(&i) = splittable.choose(&mut rng) else {
            break;
        };
        let p = done.swap_remove(i);
        let axes: Vec<usize> = (0..3).filter(|&a| !cut_positions(p.size[a], lo, hi).is_empty()).collect();
        let axis = *axes.choose(&mut rng).expect("splittable");
        let at = *cut_positions(p.size[axis], lo, hi).choose(&mut rng).expect("splittable");
        let (a, b) = split(p, axis, at);
        done.push(a);
        done.push(b);
    }

    let ordered = match spec.kind {
        SequenceKind::Cut1 => {
            done.sort_by_key(|p| (p.pos[2], p.pos[1], p.pos[0]));
            done
        }
        _ => dependency_order(done, &mut rng),
    };
    let items = ordered
        .iter()
        .map(|p| Item {
            dims: BoxDims {
                w: cells_to_m(p.size[0], g.resolution),
                d: cells_to_m(p.size[1], g.resolution),
                h: cells_to_m(p.size[2], g.resolution),
            },
            pos: Some((p.pos[0] as usize, p.pos[1] as usize, p.pos[2])),
        })
        .collect();
    Ok(ItemSequence {
        kind: spec.kind,
        seed: spec.seed,
        grid: *g,
        min: spec.min,
        max: spec.max,
        items,
    })
}

fn footprints_overlap(a: &Piece, b: &Piece) -> bool {
    a.pos[0] < b.pos[0] + b.size[0]
        && b.pos[0] < a.pos[0] + a.size[0]
        && a.pos[1] < b.pos[1] + b.size[1]
        && b.pos[1] < a.pos[1] + a.size[1]
}

/// `b` rests directly on `a`.
fn directly_below(a: &Piece, b: &Piece) -> bool {
    a.pos[2] + a.size[2] == b.pos[2] && footprints_overlap(a, b)
}

/// Random topological order of the "directly below" relation.
fn dependency_order(mut pieces: Vec<Piece>, rng: &mut ChaCha8Rng) -> Vec<Piece> {
    pieces.sort();
    let n = pieces.len();
    let mut blockers = vec![0usize; n];
    let mut above: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            if directly_below(&pieces[i], &pieces[j]) {
                blockers[j] += 1;
                above[i].push(j);
            }
        }
    }
    let mut ready: BTreeSet<usize> = (0..n).filter(|&i| blockers[i] == 0).collect();
    let mut out = Vec::with_capacity(n);
    while !ready.is_empty() {
        let pick = rng.gen_range(0..ready.len());
        let i = *ready.iter().nth(pick).expect("in range");
        ready.remove(&i);
        out.push(pieces[i]);
        for &j in &above[i] {
            blockers[j] -= 1;
            if blockers[j] == 0 {
                ready.insert(j);
            }
        }
    }
    out
}

pub fn generate(spec: &SequenceSpec) -> Result<ItemSequence> {
    match spec.kind {
        SequenceKind::Rs => gen_rs(spec),
        SequenceKind::Cut1 | SequenceKind::Cut2 => gen_cut(spec),
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SeqHeader {
    schema: String,
    kind: String,
    seed: u64,
    bin: [f64; 3],
    resolution: f64,
    count: usize,
    min: f64,
    max: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SeqLine {
    w: f64,
    d: f64,
    h: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pos: Option<(usize, usize, u32)>,
}

pub fn save_sequence<W: Write>(out: &mut W, seq: &ItemSequence) -> Result<()> {
    let header = SeqHeader {
        schema: SEQ_SCHEMA.into(),
        kind: seq.kind.name().into(),
        seed: seq.seed,
        bin: [seq.grid.bin_w, seq.grid.bin_d, seq.grid.bin_h],
        resolution: seq.grid.resolution,
        count: seq.items.len(),
        min: seq.min,
        max: seq.max,
    };
    writeln!(out, "{}", serde_json::to_string(&header).expect("header serializes"))?;
    for item in &seq.items {
        let line = SeqLine {
            w: item.dims.w,
            d: item.dims.d,
            h: item.dims.h,
            pos: item.pos,
        };
        writeln!(out, "{}", serde_json::to_string(&line).expect("item serializes"))?;
    }
    Ok(())
}

pub fn load_sequence<R: BufRead>(input: R) -> Result<ItemSequence> {
    let mut lines = input.lines();
    let header_line = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        message: "missing PBSEQ header".into(),
    })??;
    let header: SeqHeader = serde_json::from_str(&header_line).map_err(|e| Error::Parse {
        line: 1,
        message: e.to_string(),
    })?;
    if header.schema != SEQ_SCHEMA {
        return Err(Error::Parse {
            line: 1,
            message: format!("unsupported schema '{}', expected '{SEQ_SCHEMA}'", header.schema),
        });
    }
    let kind: SequenceKind = header.kind.parse().map_err(|message| Error::Parse { line: 1, message })?;
    let grid = GridSpec::new(header.bin[0], header.bin[1], header.bin[2], header.resolution).map_err(|e| {
        Error::Parse {
            line: 1,
            message: e.to_string(),
        }
    })?;
    let mut items = Vec::with_capacity(header.count);
    for (idx, line) in lines.enumerate() {
        let line = line?;
        let lineno = idx + 2;
        if line.trim().is_empty() {
            continue;
        }
        if items.len() == header.count {
            return Err(Error::Parse {
                line: lineno,
                message: format!("more items than the declared count {}", header.count),
            });
        }
        let parsed: SeqLine = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        let dims = BoxDims::new(parsed.w, parsed.d, parsed.h).map_err(|e| Error::Parse {
            line: lineno,
            message: e.to_string(),
        })?;
        items.push(Item { dims, pos: parsed.pos });
    }
    if items.len() < header.count {
        return Err(Error::Truncated {
            expected: header.count,
            found: items.len(),
        });
    }
    Ok(ItemSequence {
        kind,
        seed: header.seed,
        grid,
        min: header.min,
        max: header.max,
        items,
    })
}

/// Loads a sequence and checks its kind.
pub fn load_sequence_of_kind<R: BufRead>(input: R, expected: SequenceKind) -> Result<ItemSequence> {
    let seq = load_sequence(input)?;
    if seq.kind != expected {
        return Err(Error::KindMismatch {
            expected: expected.name().into(),
            found: seq.kind.name().into(),
        });
    }
    Ok(seq)
}
