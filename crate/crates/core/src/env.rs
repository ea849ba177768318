//! The online packing MDP: one visible item, masked `(orientation, anchor)`
//! actions, reward `r_v - r_waste`, and episode accounting.
//!
//! A step applies the empty-map update against the pre-placement heightmap,
//! then raises the heightmap, then scores the placement. Wasted volume is the
//! empty-map delta, so summed over an episode it equals the final empty-map
//! total.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::datasets::ItemSequence;
use crate::error::{Error, Result};
use crate::geometry::{snap_dims, BoxDims, Grid, GridDims, GridSpec, Heightmap, Orientation};
use crate::scalar::Scalar;
use crate::scene::{Placement, Scene};
use crate::stability::{stable_action_map, CheckerMode, EmptyMap, StableActionMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Action {
    pub orientation: Orientation,
    pub x: usize,
    pub y: usize,
}

impl Action {
    pub fn new(orientation: Orientation, x: usize, y: usize) -> Self {
        Self { orientation, x, y }
    }
}

/// Reward terms as voxel counts over the bin volume, so every fraction is
/// exact in rational arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub placed_voxels: u64,
    pub waste_voxels: u64,
    pub bin_voxels: u64,
}

impl RewardBreakdown {
    pub fn r_v<T: Scalar>(&self) -> T {
        T::ratio(self.placed_voxels as i64, self.bin_voxels as i64)
    }

    pub fn r_waste<T: Scalar>(&self) -> T {
        T::ratio(self.waste_voxels as i64, self.bin_voxels as i64)
    }

    /// `r_v - r_waste` (both weights are one).
    pub fn total<T: Scalar>(&self) -> T {
        T::ratio(
            self.placed_voxels as i64 - self.waste_voxels as i64,
            self.bin_voxels as i64,
        )
    }

    pub fn weighted<T: Scalar>(&self, alpha: T, beta: T) -> T {
        alpha * self.r_v::<T>() - beta * self.r_waste::<T>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    SequenceExhausted,
    /// The upcoming item has no accepted anchor in any orientation.
    CannotPack { item: usize },
    /// The upcoming item is larger than the bin in every orientation.
    ItemTooLarge { item: usize },
    /// A runner ended the episode after a rejected action.
    RejectedAction { item: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub mode: CheckerMode,
    pub gamma: f64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            mode: CheckerMode::ConvexHullAlpha,
            gamma: 1.0,
        }
    }
}

/// Item currently offered to the agent.
#[derive(Debug, Clone, PartialEq)]
pub struct Upcoming {
    pub index: usize,
    pub dims: BoxDims,
    pub grid: GridDims,
    /// One map per orientation, in orientation index order.
    pub maps: Vec<Arc<StableActionMap>>,
}

impl Upcoming {
    pub fn mask(&self) -> u8 {
        self.maps
            .iter()
            .enumerate()
            .filter(|(_, m)| m.any())
            .fold(0u8, |acc, (i, _)| acc | (1 << i))
    }
}

/// Four-channel observation: heightmap in voxels plus the item dims in
/// meters, each as a spatially constant channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub heightmap: Grid<u32>,
    pub item: BoxDims,
}

impl Observation {
    pub fn channels(&self) -> [Grid<f64>; 4] {
        let (nx, ny) = (self.heightmap.nx(), self.heightmap.ny());
        let h = Grid::from_vec(
            nx,
            ny,
            self.heightmap.as_slice().iter().map(|&v| v as f64).collect(),
        );
        [
            h,
            Grid::filled(nx, ny, self.item.w),
            Grid::filled(nx, ny, self.item.d),
            Grid::filled(nx, ny, self.item.h),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvState {
    config: EnvConfig,
    scene: Scene,
    sequence: Arc<ItemSequence>,
    /// Index of the next item to place; equals the number of consumed items.
    cursor: usize,
    steps: usize,
    placed_voxels: u64,
    wasted_voxels: u64,
    upcoming: Option<Upcoming>,
    termination: Option<Termination>,
    discounted_return: f64,
    seed: u64,
}

/// Per-orientation stable maps for `gd`, computing each distinct dims triple
/// once.
pub fn orientation_maps(hm: &Heightmap, em: &EmptyMap, gd: GridDims, mode: CheckerMode) -> Vec<Arc<StableActionMap>> {
    let mut maps: Vec<Arc<StableActionMap>> = Vec::with_capacity(Orientation::COUNT);
    for o in Orientation::ALL {
        let od = o.apply(gd);
        if let Some(existing) = maps.iter().find(|m| m.dims() == od) {
            let shared = Arc::clone(existing);
            maps.push(shared);
        } else {
            maps.push(Arc::new(stable_action_map(hm, em, od, mode)));
        }
    }
    maps
}

impl EnvState {
    /// Fresh episode over `sequence` in an empty bin.
    pub fn reset(spec: GridSpec, sequence: impl Into<Arc<ItemSequence>>, config: EnvConfig) -> Result<Self> {
        let sequence = sequence.into();
        if sequence.is_empty() {
            return Err(Error::EmptySequence);
        }
        let mut state = Self {
            config,
            scene: Scene::new(spec),
            seed: sequence.seed,
            sequence,
            cursor: 0,
            steps: 0,
            placed_voxels: 0,
            wasted_voxels: 0,
            upcoming: None,
            termination: None,
            discounted_return: 0.0,
        };
        state.expose_next();
        Ok(state)
    }

    fn expose_next(&mut self) {
        self.upcoming = None;
        let Some(item) = self.sequence.items.get(self.cursor) else {
            self.termination = Some(Termination::SequenceExhausted);
            return;
        };
        let grid = match snap_dims(item.dims, self.scene.spec()) {
            Ok(g) => g,
            Err(_) => {
                self.termination = Some(Termination::ItemTooLarge { item: self.cursor });
                return;
            }
        };
        let maps = orientation_maps(
            self.scene.heightmap(),
            self.scene.empty_map(),
            grid,
            self.config.mode,
        );
        let upcoming = Upcoming {
            index: self.cursor,
            dims: item.dims,
            grid,
            maps,
        };
        if upcoming.mask() == 0 {
            self.termination = Some(Termination::CannotPack { item: self.cursor });
        }
        self.upcoming = Some(upcoming);
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn spec(&self) -> &GridSpec {
        self.scene.spec()
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn heightmap(&self) -> &Heightmap {
        self.scene.heightmap()
    }

    pub fn empty_map(&self) -> &EmptyMap {
        self.scene.empty_map()
    }

    pub fn sequence(&self) -> &ItemSequence {
        &self.sequence
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn step_index(&self) -> usize {
        self.steps
    }

    pub fn placed_voxels(&self) -> u64 {
        self.placed_voxels
    }

    pub fn wasted_voxels(&self) -> u64 {
        self.wasted_voxels
    }

    pub fn discounted_return(&self) -> f64 {
        self.discounted_return
    }

    pub fn is_done(&self) -> bool {
        self.termination.is_some()
    }

    pub fn termination(&self) -> Option<Termination> {
        self.termination
    }

    /// The visible item with its stable maps, present until the sequence runs
    /// out (also when the item cannot be packed).
    pub fn upcoming(&self) -> Option<&Upcoming> {
        self.upcoming.as_ref()
    }

    /// Bit `o` is set iff orientation `o` has at least one accepted anchor.
    pub fn orientation_mask(&self) -> u8 {
        if self.is_done() {
            return 0;
        }
        self.upcoming.as_ref().map_or(0, Upcoming::mask)
    }

    pub fn maps(&self) -> Option<&[Arc<StableActionMap>]> {
        self.upcoming.as_ref().map(|u| u.maps.as_slice())
    }

    pub fn observation(&self) -> Result<Observation> {
        if self.is_done() {
            return Err(Error::EpisodeDone);
        }
        let up = self.upcoming.as_ref().ok_or(Error::EpisodeDone)?;
        Ok(Observation {
            heightmap: self.scene.heightmap().grid().clone(),
            item: up.dims,
        })
    }

    pub fn utilization(&self) -> f64 {
        self.utilization_as::<f64>()
    }

    pub fn utilization_as<T: Scalar>(&self) -> T {
        T::ratio(self.placed_voxels as i64, self.scene.spec().bin_voxels() as i64)
    }

    /// Checks an action against the current maps without applying it.
    pub fn validate(&self, action: Action) -> Result<GridDims> {
        if self.is_done() {
            return Err(Error::EpisodeDone);
        }
        let up = self.upcoming.as_ref().ok_or(Error::EpisodeDone)?;
        let reject = |reason: &str| Error::RejectedAction {
            orientation: action.orientation.index(),
            x: action.x,
            y: action.y,
            reason: reason.to_string(),
        };
        let map = &up.maps[action.orientation.index()];
        if action.x >= self.spec().nx || action.y >= self.spec().ny {
            return Err(reject("anchor outside the grid"));
        }
        if !map.is_stable(action.x, action.y) {
            return Err(reject("anchor is not in the stable action map"));
        }
        Ok(map.dims())
    }

    /// Applies a validated action. On error the state is unchanged.
    pub fn step(&mut self, action: Action) -> Result<(RewardBreakdown, bool)> {
        let gd = self.validate(action)?;
        let Placement { gap_voxels, .. } = self.scene.place((action.x, action.y), gd)?;
        let reward = RewardBreakdown {
            placed_voxels: gd.volume(),
            waste_voxels: gap_voxels,
            bin_voxels: self.scene.spec().bin_voxels(),
        };
        self.placed_voxels += reward.placed_voxels;
        self.wasted_voxels += reward.waste_voxels;
        self.discounted_return += self.config.gamma.powi(self.steps as i32) * reward.total::<f64>();
        self.steps += 1;
        self.cursor += 1;
        self.expose_next();
        Ok((reward, self.is_done()))
    }

    /// Drops the upcoming item without placing it.
    pub fn skip_item(&mut self) -> Result<()> {
        if matches!(self.termination, Some(Termination::SequenceExhausted)) {
            return Err(Error::EpisodeDone);
        }
        self.termination = None;
        self.cursor += 1;
        self.expose_next();
        Ok(())
    }

    /// Marks the episode done after a rejected action.
    pub fn terminate_rejected(&mut self) {
        if self.termination.is_none() {
            self.termination = Some(Termination::RejectedAction { item: self.cursor });
        }
    }
}

/// Summary of one finished episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub utilization: f64,
    pub items_placed: usize,
    pub termination: Option<Termination>,
    pub wasted_fraction: f64,
    pub rewards: Vec<RewardBreakdown>,
    /// Standard deviation of item volumes over the sequence, cubic meters.
    pub volume_std: f64,
    pub falls: usize,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{gen_rs, Item, SequenceKind, SequenceSpec};
    use num_rational::Rational64;

    fn seq_of(grid: GridSpec, dims: &[(f64, f64, f64)]) -> ItemSequence {
        ItemSequence {
            kind: SequenceKind::Rs,
            seed: 0,
            grid,
            min: 0.0,
            max: 1.0,
            items: dims
                .iter()
                .map(|&(w, d, h)| Item {
                    dims: BoxDims::new(w, d, h).unwrap(),
                    pos: None,
                })
                .collect(),
        }
    }

    #[test]
    fn reset_exposes_first_item() {
        let grid = GridSpec::default();
        let seq = gen_rs(&SequenceSpec::rs(1, 10, 0.03, 0.3, grid)).unwrap();
        let s = EnvState::reset(grid, seq.clone(), EnvConfig::default()).unwrap();
        assert_eq!(s.step_index(), 0);
        assert_eq!(s.utilization(), 0.0);
        assert_eq!(s.orientation_mask(), 0b11_1111);
        assert_eq!(s, EnvState::reset(grid, seq, EnvConfig::default()).unwrap());
    }

    #[test]
    fn reset_errors_and_oversize_items() {
        let grid = GridSpec::default();
        let empty = seq_of(grid, &[]);
        assert!(matches!(
            EnvState::reset(grid, empty, EnvConfig::default()),
            Err(Error::EmptySequence)
        ));
        let s = EnvState::reset(grid, seq_of(grid, &[(0.7, 0.1, 0.1)]), EnvConfig::default()).unwrap();
        assert!(s.is_done());
        assert_eq!(s.termination(), Some(Termination::ItemTooLarge { item: 0 }));
        assert!(s.observation().is_err());
    }

    #[test]
    fn ground_step_reward() {
        let grid = GridSpec::default();
        let mut s = EnvState::reset(grid, seq_of(grid, &[(0.1, 0.1, 0.1), (0.1, 0.1, 0.1)]), EnvConfig::default())
            .unwrap();
        let (r, done) = s.step(Action::new(Orientation::ALL[0], 0, 0)).unwrap();
        assert!(!done);
        assert_eq!(r.r_v::<Rational64>(), Rational64::new(8000, 1_728_000));
        assert_eq!(r.r_waste::<Rational64>(), Rational64::from_integer(0));
        assert!((r.total::<f64>() - 0.004_629_6).abs() < 1e-6);
        assert_eq!(s.utilization_as::<Rational64>(), Rational64::new(8000, 1_728_000));
        let obs = s.observation().unwrap();
        assert_eq!(*obs.heightmap.get(0, 0), 20);
        let ch = obs.channels();
        assert!(ch[1].as_slice().iter().all(|&v| v == 0.1));
    }

    #[test]
    fn bridge_step_counts_trapped_gap() {
        // 8x4 cell bin; pillars of height 10 and 8 under a 4x4 bridge.
        let grid = GridSpec::from_cells(8, 4, 40, 0.005).unwrap();
        let r = 0.005;
        let seq = seq_of(grid, &[(2.0 * r, 4.0 * r, 10.0 * r), (2.0 * r, 4.0 * r, 8.0 * r), (4.0 * r, 4.0 * r, 2.0 * r)]);
        let mut s = EnvState::reset(grid, seq, EnvConfig { mode: CheckerMode::ConvexHull1, gamma: 1.0 }).unwrap();
        s.step(Action::new(Orientation::ALL[0], 0, 0)).unwrap();
        s.step(Action::new(Orientation::ALL[0], 2, 0)).unwrap();
        // Under CH1 only the 10-high cells support: hull x in [0,1], center 1.5.
        assert!(s.validate(Action::new(Orientation::ALL[0], 0, 0)).is_err());
        // Wider pillar on the left makes the bridge stable under CH1.
        let seq = seq_of(grid, &[(3.0 * r, 4.0 * r, 10.0 * r), (1.0 * r, 4.0 * r, 8.0 * r), (4.0 * r, 4.0 * r, 2.0 * r)]);
        let mut s = EnvState::reset(grid, seq, EnvConfig::default()).unwrap();
        s.step(Action::new(Orientation::ALL[0], 0, 0)).unwrap();
        s.step(Action::new(Orientation::ALL[0], 3, 0)).unwrap();
        let (rw, done) = s.step(Action::new(Orientation::ALL[0], 0, 0)).unwrap();
        assert!(done);
        assert_eq!(rw.waste_voxels, 8);
        assert_eq!(rw.r_waste::<Rational64>(), Rational64::new(8, 8 * 4 * 40));
        assert_eq!(s.termination(), Some(Termination::SequenceExhausted));
        assert_eq!(s.wasted_voxels(), s.empty_map().total());
    }

    #[test]
    fn rejected_action_leaves_state_unchanged() {
        let grid = GridSpec::default();
        let mut s = EnvState::reset(grid, seq_of(grid, &[(0.1, 0.1, 0.1)]), EnvConfig::default()).unwrap();
        let before = s.clone();
        let err = s.step(Action::new(Orientation::ALL[0], 101, 0)).unwrap_err();
        assert!(matches!(err, Error::RejectedAction { .. }));
        assert_eq!(s, before);
        s.step(Action::new(Orientation::ALL[0], 0, 0)).unwrap();
        assert!(s.is_done());
        let done = s.clone();
        assert!(matches!(s.step(Action::new(Orientation::ALL[0], 50, 50)), Err(Error::EpisodeDone)));
        assert_eq!(s, done);
    }

    #[test]
    fn mask_excludes_too_tall_orientations() {
        // 0.5 m tall bin, item 0.55 long: only the orientations laying it flat work.
        let grid = GridSpec::new(0.6, 0.6, 0.5, 0.005).unwrap();
        let s = EnvState::reset(grid, seq_of(grid, &[(0.55, 0.1, 0.2)]), EnvConfig::default()).unwrap();
        // The 0.55 side is vertical in orientations 3 (d,h,w) and 5 (h,d,w).
        assert_eq!(s.orientation_mask(), 0b01_0111);
    }

    #[test]
    fn observation_ignores_masking() {
        let grid = GridSpec::default();
        let a = EnvState::reset(grid, seq_of(grid, &[(0.1, 0.1, 0.1)]), EnvConfig::default()).unwrap();
        let b = EnvState::reset(
            grid,
            seq_of(grid, &[(0.1, 0.1, 0.1)]),
            EnvConfig {
                mode: CheckerMode::ConvexHull1,
                gamma: 0.9,
            },
        )
        .unwrap();
        assert_eq!(a.observation().unwrap(), b.observation().unwrap());
    }
}
