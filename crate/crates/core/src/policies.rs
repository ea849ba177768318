//! Baseline decision makers. Every policy picks only anchors that are true in
//! the stable action map of the chosen orientation.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{Action, EnvState};
use crate::error::{Error, Result};
use crate::geometry::{Heightmap, Orientation};
use crate::stability::StableActionMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    RandomStable,
    Dblf,
    GreedyMinWaste,
    External,
}

impl PolicyKind {
    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::RandomStable => "random",
            PolicyKind::Dblf => "dblf",
            PolicyKind::GreedyMinWaste => "greedy",
            PolicyKind::External => "external",
        }
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "random" | "random-stable" | "random_stable" => Ok(PolicyKind::RandomStable),
            "dblf" => Ok(PolicyKind::Dblf),
            "greedy" | "min-waste" | "greedy_min_waste" => Ok(PolicyKind::GreedyMinWaste),
            "external" => Ok(PolicyKind::External),
            other => Err(format!(
                "unknown policy '{other}' (expected random, dblf, greedy or external)"
            )),
        }
    }
}

pub trait Policy {
    fn name(&self) -> &str;

    /// Chooses an action for the visible item. [`Error::NoAction`] when no
    /// orientation has a stable anchor.
    fn act(&mut self, state: &EnvState) -> Result<Action>;
}

fn state_maps(state: &EnvState) -> Result<&[Arc<StableActionMap>]> {
    if state.is_done() {
        return Err(Error::EpisodeDone);
    }
    state.maps().ok_or(Error::EpisodeDone)
}

/// Uniform over all stable `(orientation, x, y)` triples.
pub fn random_stable<R: Rng + ?Sized>(maps: &[Arc<StableActionMap>], rng: &mut R) -> Option<Action> {
    let total: usize = maps.iter().map(|m| m.count()).sum();
    if total == 0 {
        return None;
    }
    let mut pick = rng.gen_range(0..total);
    for (o, map) in maps.iter().enumerate() {
        if pick < map.count() {
            let (x, y) = map.anchors().nth(pick).expect("count matches anchors");
            return Some(Action::new(Orientation::ALL[o], x, y));
        }
        pick -= map.count();
    }
    unreachable!("pick is below the total count")
}

/// Stable action minimizing `(rest height, y, x, orientation)`.
pub fn greedy_dblf(maps: &[Arc<StableActionMap>]) -> Option<Action> {
    let mut best: Option<((u32, usize, usize, usize), Action)> = None;
    for (o, map) in maps.iter().enumerate() {
        for (x, y) in map.anchors() {
            let key = (map.rest(x, y), y, x, o);
            if best.as_ref().is_none_or(|(k, _)| key < *k) {
                best = Some((key, Action::new(Orientation::ALL[o], x, y)));
            }
        }
    }
    best.map(|(_, a)| a)
}

/// Summed-area table with a zero border: `at(x, y)` sums `[0, x) x [0, y)`.
struct PrefixSums {
    nx1: usize,
    sums: Vec<u64>,
}

impl PrefixSums {
    fn new(hm: &Heightmap) -> Self {
        let (nx, ny) = (hm.nx(), hm.ny());
        let nx1 = nx + 1;
        let mut sums = vec![0u64; nx1 * (ny + 1)];
        for y in 0..ny {
            let mut row = 0u64;
            for x in 0..nx {
                row += hm.at(x, y) as u64;
                sums[(y + 1) * nx1 + x + 1] = sums[y * nx1 + x + 1] + row;
            }
        }
        Self { nx1, sums }
    }

    fn window(&self, x: usize, y: usize, w: usize, d: usize) -> u64 {
        let at = |x: usize, y: usize| self.sums[y * self.nx1 + x];
        at(x + w, y + d) + at(x, y) - at(x + w, y) - at(x, y + d)
    }
}

/// Voxels a placement would trap under its footprint.
pub fn trapped_voxels(hm: &Heightmap, map: &StableActionMap, x: usize, y: usize) -> u64 {
    let (w, d) = map.dims().footprint();
    let sums = PrefixSums::new(hm);
    map.rest(x, y) as u64 * (w * d) as u64 - sums.window(x, y, w, d)
}

/// Stable action with the best one-step reward. The placed volume is the same
/// in every orientation, so this minimizes trapped voxels; ties follow the
/// DBLF order.
pub fn greedy_min_waste(hm: &Heightmap, maps: &[Arc<StableActionMap>]) -> Option<Action> {
    type Key = (u64, u32, usize, usize, usize);
    let sums = PrefixSums::new(hm);
    let mut best: Option<(Key, Action)> = None;
    for (o, map) in maps.iter().enumerate() {
        let (w, d) = map.dims().footprint();
        for (x, y) in map.anchors() {
            let rest = map.rest(x, y);
            let waste = rest as u64 * (w * d) as u64 - sums.window(x, y, w, d);
            let key = (waste, rest, y, x, o);
            if best.as_ref().is_none_or(|(k, _)| key < *k) {
                best = Some((key, Action::new(Orientation::ALL[o], x, y)));
            }
        }
    }
    best.map(|(_, a)| a)
}

pub struct RandomStable {
    rng: ChaCha8Rng,
}

impl RandomStable {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Policy for RandomStable {
    fn name(&self) -> &str {
        "random"
    }

    fn act(&mut self, state: &EnvState) -> Result<Action> {
        random_stable(state_maps(state)?, &mut self.rng).ok_or(Error::NoAction)
    }
}

pub struct Dblf;

impl Policy for Dblf {
    fn name(&self) -> &str {
        "dblf"
    }

    fn act(&mut self, state: &EnvState) -> Result<Action> {
        greedy_dblf(state_maps(state)?).ok_or(Error::NoAction)
    }
}

pub struct GreedyMinWaste;

impl Policy for GreedyMinWaste {
    fn name(&self) -> &str {
        "greedy"
    }

    fn act(&mut self, state: &EnvState) -> Result<Action> {
        greedy_min_waste(state.heightmap(), state_maps(state)?).ok_or(Error::NoAction)
    }
}

/// Built-in policy for `kind`; `External` needs an agent connection and is
/// constructed through the protocol module instead.
pub fn builtin(kind: PolicyKind, seed: u64) -> Option<Box<dyn Policy + Send>> {
    match kind {
        PolicyKind::RandomStable => Some(Box::new(RandomStable::new(seed))),
        PolicyKind::Dblf => Some(Box::new(Dblf)),
        PolicyKind::GreedyMinWaste => Some(Box::new(GreedyMinWaste)),
        PolicyKind::External => None,
    }
}
