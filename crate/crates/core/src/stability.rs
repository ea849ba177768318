//! Stable-placement detection over a heightmap (convexHull-1 and
//! convexHull-α) and the empty map that tracks gaps trapped under boxes.
//!
//! A placement anchored at `(x, y)` is accepted when the box fits under the
//! bin ceiling and either rests on bare floor or the geometric center of its
//! footprint lies in the convex hull of its support cells. The support cells
//! are the cells of the window equal to the window maximum. convexHull-α
//! additionally drops support cells whose column holds a trapped gap, so only
//! columns that are solid down to the floor count as support.
//!
//! Two routes compute the same answer. [`stable_at`] follows the literal
//! per-anchor procedure. [`stable_action_map`] evaluates every anchor at once
//! from per-row sliding-window extremes, using the fact that the hull of the
//! support cells equals the hull of each row's leftmost and rightmost support
//! cell.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{check_window, GridDims, Grid, Heightmap, GridSpec};
use crate::hull::{center_in_hull, center_in_vertices, convex_hull, hull_sorted_into, Cell, HalfPoint, HullPolygon};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CheckerMode {
    /// Hull of all highest points in the window.
    #[serde(rename = "ch1")]
    ConvexHull1,
    /// Hull of the highest points whose column has no trapped gap.
    #[serde(rename = "cha")]
    ConvexHullAlpha,
}

impl CheckerMode {
    pub fn name(self) -> &'static str {
        match self {
            CheckerMode::ConvexHull1 => "ch1",
            CheckerMode::ConvexHullAlpha => "cha",
        }
    }
}

impl std::str::FromStr for CheckerMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "ch1" | "convexhull-1" => Ok(CheckerMode::ConvexHull1),
            "cha" | "convexhull-alpha" => Ok(CheckerMode::ConvexHullAlpha),
            other => Err(format!("unknown checker '{other}' (expected ch1 or cha)")),
        }
    }
}

/// Accumulated trapped-gap height per column, in voxels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EmptyMap {
    grid: Grid<u32>,
}

impl EmptyMap {
    pub fn empty(spec: &GridSpec) -> Self {
        Self {
            grid: Grid::filled(spec.nx, spec.ny, 0),
        }
    }

    pub fn from_grid(grid: Grid<u32>) -> Self {
        Self { grid }
    }

    pub fn grid(&self) -> &Grid<u32> {
        &self.grid
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> u32 {
        *self.grid.get(x, y)
    }

    /// Sum over all columns: total trapped volume in voxels.
    pub fn total(&self) -> u64 {
        self.grid.as_slice().iter().map(|&v| v as u64).sum()
    }

    /// Adds the gaps a box resting at `anchor` traps under its footprint and
    /// returns the number of newly trapped voxels. `hm` must be the heightmap
    /// before the box is placed.
    pub fn update_mut(&mut self, hm: &Heightmap, anchor: (usize, usize), gd: GridDims) -> Result<u64> {
        let rest = hm.window_max(anchor, gd.footprint())?;
        let (x0, y0) = anchor;
        let mut added = 0u64;
        for y in y0..y0 + gd.d as usize {
            for x in x0..x0 + gd.w as usize {
                let gap = rest - hm.at(x, y);
                *self.grid.get_mut(x, y) += gap;
                added += gap as u64;
            }
        }
        Ok(added)
    }
}

/// Pure form of [`EmptyMap::update_mut`]: returns the updated map and the
/// newly trapped voxel count.
pub fn update_empty_map(
    hm: &Heightmap,
    em: &EmptyMap,
    anchor: (usize, usize),
    gd: GridDims,
) -> Result<(EmptyMap, u64)> {
    let mut next = em.clone();
    let added = next.update_mut(hm, anchor, gd)?;
    Ok((next, added))
}

/// Window-local support cells.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SupportSet(pub Vec<Cell>);

impl SupportSet {
    pub fn cells(&self) -> &[Cell] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Copies the `w x d` window at `anchor` out of a grid.
pub fn window_of(grid: &Grid<u32>, anchor: (usize, usize), footprint: (usize, usize)) -> Result<Grid<u32>> {
    check_window(grid.nx(), grid.ny(), anchor, footprint)?;
    let (x, y) = anchor;
    let (w, d) = footprint;
    let cells = (y..y + d)
        .flat_map(|row| grid.row(row)[x..x + w].iter().copied())
        .collect();
    Ok(Grid::from_vec(w, d, cells))
}

/// Cells equal to the window maximum.
pub fn support_points(window: &Grid<u32>) -> SupportSet {
    let max = window.as_slice().iter().copied().max().unwrap_or(0);
    let mut out = Vec::new();
    for y in 0..window.ny() {
        for x in 0..window.nx() {
            if *window.get(x, y) == max {
                out.push(Cell::new(x as i64, y as i64));
            }
        }
    }
    SupportSet(out)
}

/// Keeps the support cells whose empty-map entry is zero.
pub fn filter_grounded(pf: &SupportSet, empty_window: &Grid<u32>) -> SupportSet {
    SupportSet(
        pf.0.iter()
            .copied()
            .filter(|c| *empty_window.get(c.x as usize, c.y as usize) == 0)
            .collect(),
    )
}

/// Outcome of checking one anchor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnchorCheck {
    OutOfBounds,
    TooTall { rest: u32 },
    Ground,
    Supported { rest: u32, hull: HullPolygon, inside: bool },
}

impl AnchorCheck {
    pub fn accepted(&self) -> bool {
        matches!(
            self,
            AnchorCheck::Ground | AnchorCheck::Supported { inside: true, .. }
        )
    }
}

/// Literal per-anchor check, returning the intermediate hull for inspection.
pub fn check_anchor(
    hm: &Heightmap,
    em: &EmptyMap,
    anchor: (usize, usize),
    gd: GridDims,
    mode: CheckerMode,
) -> AnchorCheck {
    let footprint = gd.footprint();
    let Ok(window) = window_of(hm.grid(), anchor, footprint) else {
        return AnchorCheck::OutOfBounds;
    };
    let rest = window.as_slice().iter().copied().max().unwrap_or(0);
    if rest + gd.h > hm.nz() {
        return AnchorCheck::TooTall { rest };
    }
    if rest == 0 {
        return AnchorCheck::Ground;
    }
    let mut pf = support_points(&window);
    if mode == CheckerMode::ConvexHullAlpha {
        let ew = window_of(em.grid(), anchor, footprint).expect("congruent grids");
        pf = filter_grounded(&pf, &ew);
    }
    let hull = convex_hull(pf.cells());
    let inside = center_in_hull(&hull, HalfPoint::window_center(footprint.0, footprint.1));
    AnchorCheck::Supported { rest, hull, inside }
}

pub fn stable_at(hm: &Heightmap, em: &EmptyMap, anchor: (usize, usize), gd: GridDims, mode: CheckerMode) -> bool {
    check_anchor(hm, em, anchor, gd, mode).accepted()
}

/// Anchors at which one oriented box is accepted, plus the rest height
/// (window maximum) at every in-bounds anchor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StableActionMap {
    dims: GridDims,
    stable: Grid<bool>,
    rest: Grid<u32>,
    count: usize,
    diagnostic: Option<String>,
}

impl StableActionMap {
    pub fn dims(&self) -> GridDims {
        self.dims
    }

    pub fn grid(&self) -> &Grid<bool> {
        &self.stable
    }

    #[inline]
    pub fn is_stable(&self, x: usize, y: usize) -> bool {
        x < self.stable.nx() && y < self.stable.ny() && *self.stable.get(x, y)
    }

    /// Window maximum at an in-bounds anchor; 0 elsewhere.
    #[inline]
    pub fn rest(&self, x: usize, y: usize) -> u32 {
        *self.rest.get(x, y)
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn any(&self) -> bool {
        self.count > 0
    }

    /// Set when the footprint is larger than the grid.
    pub fn diagnostic(&self) -> Option<&str> {
        self.diagnostic.as_deref()
    }

    /// Stable anchors in row-major order (`y` then `x`).
    pub fn anchors(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let nx = self.stable.nx();
        self.stable
            .as_slice()
            .iter()
            .enumerate()
            .filter(|(_, &s)| s)
            .map(move |(i, _)| (i % nx, i / nx))
    }
}

/// Sliding-window maximum of `values` with width `w`, along with the first and
/// last index attaining it. Entries with a negative key never count.
fn sliding_extremes(values: &[i64], w: usize, max: &mut Vec<i64>, first: &mut Vec<usize>, last: &mut Vec<usize>) {
    max.clear();
    first.clear();
    last.clear();
    // Monotone queues stored as a vector plus a front index.
    let mut keep_first: Vec<usize> = Vec::with_capacity(values.len());
    let mut keep_last: Vec<usize> = Vec::with_capacity(values.len());
    let (mut head_first, mut head_last) = (0, 0);
    for (i, &v) in values.iter().enumerate() {
        while keep_first.len() > head_first && values[keep_first[keep_first.len() - 1]] < v {
            keep_first.pop();
        }
        keep_first.push(i);
        while keep_last.len() > head_last && values[keep_last[keep_last.len() - 1]] <= v {
            keep_last.pop();
        }
        keep_last.push(i);
        if i + 1 >= w {
            let start = i + 1 - w;
            while keep_first[head_first] < start {
                head_first += 1;
            }
            while keep_last[head_last] < start {
                head_last += 1;
            }
            let f = keep_first[head_first];
            max.push(values[f]);
            first.push(f);
            last.push(keep_last[head_last]);
        }
    }
}

/// Per anchor column `x` and row `r`, at `x * ny + r`: `(max, first, last)`
/// of the row segment starting at `x`. Column-major so an anchor's rows are
/// contiguous.
struct RowExtremes {
    max: Vec<i64>,
    first: Vec<usize>,
    last: Vec<usize>,
}

fn row_extremes(ny: usize, ax: usize, w: usize, row_keys: impl Fn(usize) -> Vec<i64>) -> RowExtremes {
    let mut out = RowExtremes {
        max: vec![0; ax * ny],
        first: vec![0; ax * ny],
        last: vec![0; ax * ny],
    };
    let (mut m, mut f, mut l) = (Vec::new(), Vec::new(), Vec::new());
    for y in 0..ny {
        sliding_extremes(&row_keys(y), w, &mut m, &mut f, &mut l);
        for x in 0..ax {
            out.max[x * ny + y] = m[x];
            out.first[x * ny + y] = f[x];
            out.last[x * ny + y] = l[x];
        }
    }
    out
}

/// Stable action map for one oriented box.
pub fn stable_action_map(hm: &Heightmap, em: &EmptyMap, gd: GridDims, mode: CheckerMode) -> StableActionMap {
    let (nx, ny) = (hm.nx(), hm.ny());
    let (w, d) = gd.footprint();
    let mut stable = Grid::filled(nx, ny, false);
    let mut rest = Grid::filled(nx, ny, 0u32);
    if w > nx || d > ny || gd.h > hm.nz() {
        return StableActionMap {
            dims: gd,
            stable,
            rest,
            count: 0,
            diagnostic: Some(format!(
                "box {}x{}x{} exceeds the {}x{}x{} grid",
                gd.w,
                gd.d,
                gd.h,
                nx,
                ny,
                hm.nz()
            )),
        };
    }
    let ax = nx - w + 1;
    let ay = ny - d + 1;

    let heights = row_extremes(ny, ax, w, |y| hm.grid().row(y).iter().map(|&h| h as i64).collect());
    let grounded = (mode == CheckerMode::ConvexHullAlpha).then(|| {
        row_extremes(ny, ax, w, |y| {
            hm.grid()
                .row(y)
                .iter()
                .zip(em.grid().row(y))
                .map(|(&h, &e)| if e == 0 { h as i64 } else { -1 })
                .collect()
        })
    });
    let support = grounded.as_ref().unwrap_or(&heights);
    // Points are transposed to (row, column) so each row's pair arrives in
    // monotone-chain order; the center is transposed to match.
    let center = HalfPoint::new(d as i64 - 1, w as i64 - 1);
    let nz = hm.nz();

    // Window maximum per anchor: a column pass over the row maxima.
    let mut tops = vec![0i64; ax * ay];
    let (mut m, mut f, mut l) = (Vec::new(), Vec::new(), Vec::new());
    let mut column = Vec::with_capacity(ny);
    for x in 0..ax {
        column.clear();
        column.extend_from_slice(&heights.max[x * ny..(x + 1) * ny]);
        sliding_extremes(&column, d, &mut m, &mut f, &mut l);
        for (y, &top) in m.iter().enumerate() {
            tops[y * ax + x] = top;
        }
    }

    let rows: Vec<(Vec<bool>, Vec<u32>)> = (0..ay)
        .into_par_iter()
        .map(|y| {
            let mut stable_row = vec![false; ax];
            let mut rest_row = vec![0u32; ax];
            let mut pts: Vec<Cell> = Vec::with_capacity(2 * d);
            let mut hull: Vec<Cell> = Vec::with_capacity(4 * d);
            for x in 0..ax {
                let top = tops[y * ax + x];
                rest_row[x] = top as u32;
                if top as u32 + gd.h > nz {
                    continue;
                }
                if top == 0 {
                    stable_row[x] = true;
                    continue;
                }
                pts.clear();
                let (mut col_min, mut col_max) = (i64::MAX, i64::MIN);
                for r in y..y + d {
                    let k = x * ny + r;
                    if support.max[k] == top {
                        let row = (r - y) as i64;
                        let lo = (support.first[k] - x) as i64;
                        let hi = (support.last[k] - x) as i64;
                        col_min = col_min.min(lo);
                        col_max = col_max.max(hi);
                        pts.push(Cell::new(row, lo));
                        if hi != lo {
                            pts.push(Cell::new(row, hi));
                        }
                    }
                }
                // The hull lies inside the bounding box of its points.
                if pts.len() < 3
                    || 2 * pts[0].x > center.x2
                    || 2 * pts[pts.len() - 1].x < center.x2
                    || 2 * col_min > center.y2
                    || 2 * col_max < center.y2
                {
                    continue;
                }
                hull_sorted_into(&pts, &mut hull);
                stable_row[x] = center_in_vertices(&hull, center);
            }
            (stable_row, rest_row)
        })
        .collect();

    let mut count = 0;
    for (y, (s, r)) in rows.into_iter().enumerate() {
        for x in 0..ax {
            *stable.get_mut(x, y) = s[x];
            *rest.get_mut(x, y) = r[x];
            count += s[x] as usize;
        }
    }
    StableActionMap {
        dims: gd,
        stable,
        rest,
        count,
        diagnostic: None,
    }
}

/// Reference map built by running [`stable_at`] at every anchor.
pub fn stable_action_map_reference(hm: &Heightmap, em: &EmptyMap, gd: GridDims, mode: CheckerMode) -> Grid<bool> {
    let (nx, ny) = (hm.nx(), hm.ny());
    let mut out = Grid::filled(nx, ny, false);
    for y in 0..ny {
        for x in 0..nx {
            *out.get_mut(x, y) = stable_at(hm, em, (x, y), gd, mode);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::GridSpec;
    use proptest::prelude::*;

    fn grid_u32(nx: usize, ny: usize, v: &[u32]) -> Grid<u32> {
        Grid::from_vec(nx, ny, v.to_vec())
    }

    #[test]
    fn support_points_pick_the_maximum() {
        let s = support_points(&grid_u32(2, 2, &[5, 5, 0, 0]));
        assert_eq!(s.cells(), &[Cell::new(0, 0), Cell::new(1, 0)]);
        assert_eq!(support_points(&grid_u32(2, 2, &[3, 3, 3, 3])).len(), 4);
        let s = support_points(&grid_u32(3, 3, &[2, 5, 5, 1, 0, 0, 3, 3, 3]));
        assert_eq!(s.cells(), &[Cell::new(1, 0), Cell::new(2, 0)]);
    }

    #[test]
    fn grounded_filter() {
        let pf = SupportSet(vec![Cell::new(0, 0), Cell::new(3, 3)]);
        let mut e = vec![0u32; 16];
        e[3 * 4 + 3] = 2;
        assert_eq!(filter_grounded(&pf, &grid_u32(4, 4, &e)).cells(), &[Cell::new(0, 0)]);
        assert_eq!(filter_grounded(&pf, &grid_u32(4, 4, &[0; 16])), pf);
        assert!(filter_grounded(&pf, &grid_u32(4, 4, &[1; 16])).is_empty());
    }

    #[test]
    fn empty_bin_accepts_exact_anchor_region() {
        let spec = GridSpec::default();
        let hm = Heightmap::empty(&spec);
        let em = EmptyMap::empty(&spec);
        let gd = GridDims::new(6, 6, 6);
        for mode in [CheckerMode::ConvexHull1, CheckerMode::ConvexHullAlpha] {
            let map = stable_action_map(&hm, &em, gd, mode);
            assert_eq!(map.count(), 115 * 115);
            assert!(map.is_stable(0, 0) && map.is_stable(114, 114));
            assert!(!map.is_stable(115, 0) && !map.is_stable(0, 115));
        }
    }

    #[test]
    fn oversize_box_gives_empty_map_with_diagnostic() {
        let spec = GridSpec::from_cells(10, 10, 10, 0.005).unwrap();
        let map = stable_action_map(
            &Heightmap::empty(&spec),
            &EmptyMap::empty(&spec),
            GridDims::new(11, 2, 2),
            CheckerMode::ConvexHull1,
        );
        assert_eq!(map.count(), 0);
        assert!(map.diagnostic().is_some());
    }

    #[test]
    fn too_tall_anchors_rejected() {
        let spec = GridSpec::from_cells(10, 10, 10, 0.005).unwrap();
        let mut hm = Heightmap::empty(&spec);
        let em = EmptyMap::empty(&spec);
        hm.place_mut((0, 0), GridDims::new(10, 5, 6)).unwrap();
        let map = stable_action_map(&hm, &em, GridDims::new(2, 2, 5), CheckerMode::ConvexHull1);
        assert!(!map.is_stable(0, 0));
        assert!(map.is_stable(0, 5));
        assert_eq!(map.rest(0, 0), 6);
    }

    #[test]
    fn empty_map_update_rules() {
        let spec = GridSpec::from_cells(10, 10, 30, 0.005).unwrap();
        let hm = Heightmap::empty(&spec);
        let em = EmptyMap::empty(&spec);
        let (em1, added) = update_empty_map(&hm, &em, (0, 0), GridDims::new(4, 4, 2)).unwrap();
        assert_eq!(added, 0);
        assert_eq!(em1, em);

        // Pillars of 10 (x 0..2) and 8 (x 2..4), then a 4x4 bridge.
        let mut hm = Heightmap::empty(&spec);
        hm.place_mut((0, 0), GridDims::new(2, 4, 10)).unwrap();
        hm.place_mut((2, 0), GridDims::new(2, 4, 8)).unwrap();
        let (em2, added) = update_empty_map(&hm, &em, (0, 0), GridDims::new(4, 4, 2)).unwrap();
        assert_eq!(added, 16);
        for y in 0..4 {
            assert_eq!(em2.at(0, y), 0);
            assert_eq!(em2.at(1, y), 0);
            assert_eq!(em2.at(2, y), 2);
            assert_eq!(em2.at(3, y), 2);
        }

        // A second bridge over a fresh 3-deep gap in the same columns adds up.
        hm.place_mut((0, 0), GridDims::new(4, 4, 2)).unwrap();
        hm.place_mut((0, 0), GridDims::new(2, 4, 3)).unwrap();
        let (em3, added) = update_empty_map(&hm, &em2, (0, 0), GridDims::new(4, 4, 1)).unwrap();
        assert_eq!(added, 24);
        assert_eq!(em3.at(3, 0), 2 + 3);
        assert_eq!(em3.total(), 16 + 24);
    }

    /// Left pillar grounded, right pillar standing on a bridge that traps a
    /// gap, plate spanning both.
    #[test]
    fn hanging_pillar_splits_the_two_modes() {
        let spec = GridSpec::from_cells(12, 4, 40, 0.005).unwrap();
        let mut hm = Heightmap::empty(&spec);
        let mut em = EmptyMap::empty(&spec);
        let place = |hm: &mut Heightmap, em: &mut EmptyMap, a: (usize, usize), gd: GridDims| {
            em.update_mut(hm, a, gd).unwrap();
            hm.place_mut(a, gd).unwrap();
        };
        // Left pillar: x 0..2, height 10.
        place(&mut hm, &mut em, (0, 0), GridDims::new(2, 4, 10));
        // Mid layer: block x 8..10 height 6, bridge x 6..12 resting on it.
        place(&mut hm, &mut em, (8, 0), GridDims::new(2, 4, 6));
        place(&mut hm, &mut em, (6, 0), GridDims::new(6, 4, 2));
        // Right pillar on the bridge overhang: x 10..12, top at 10.
        place(&mut hm, &mut em, (10, 0), GridDims::new(2, 4, 2));
        assert_eq!(hm.at(11, 0), 10);
        assert!(em.at(11, 0) > 0);
        assert_eq!(em.at(0, 0), 0);

        let plate = GridDims::new(12, 4, 2);
        assert!(stable_at(&hm, &em, (0, 0), plate, CheckerMode::ConvexHull1));
        assert!(!stable_at(&hm, &em, (0, 0), plate, CheckerMode::ConvexHullAlpha));
    }

    fn random_scene(seed_boxes: &[(usize, usize, u32, u32, u32)], spec: &GridSpec) -> (Heightmap, EmptyMap) {
        let mut hm = Heightmap::empty(spec);
        let mut em = EmptyMap::empty(spec);
        for &(x, y, w, d, h) in seed_boxes {
            let gd = GridDims::new(w, d, h);
            if x + w as usize > spec.nx || y + d as usize > spec.ny {
                continue;
            }
            if hm.window_max((x, y), gd.footprint()).unwrap() + h > hm.nz() {
                continue;
            }
            em.update_mut(&hm, (x, y), gd).unwrap();
            hm.place_mut((x, y), gd).unwrap();
        }
        (hm, em)
    }

    proptest! {
        #[test]
        fn fast_map_matches_reference(
            boxes in prop::collection::vec((0usize..14, 0usize..14, 1u32..7, 1u32..7, 1u32..6), 0..14),
            item in (1u32..8, 1u32..8, 1u32..6),
            alpha in any::<bool>(),
        ) {
            let spec = GridSpec::from_cells(16, 14, 30, 0.005).unwrap();
            let (hm, em) = random_scene(&boxes, &spec);
            let gd = GridDims::new(item.0, item.1, item.2);
            let mode = if alpha { CheckerMode::ConvexHullAlpha } else { CheckerMode::ConvexHull1 };
            let fast = stable_action_map(&hm, &em, gd, mode);
            let slow = stable_action_map_reference(&hm, &em, gd, mode);
            prop_assert_eq!(fast.grid(), &slow);
            for y in 0..=(spec.ny - gd.d as usize) {
                for x in 0..=(spec.nx - gd.w as usize) {
                    prop_assert_eq!(fast.rest(x, y), hm.window_max((x, y), gd.footprint()).unwrap());
                }
            }
        }

        #[test]
        fn alpha_accepts_subset_of_ch1(
            boxes in prop::collection::vec((0usize..14, 0usize..14, 1u32..7, 1u32..7, 1u32..6), 0..14),
            item in (1u32..8, 1u32..8, 1u32..6),
        ) {
            let spec = GridSpec::from_cells(16, 16, 30, 0.005).unwrap();
            let (hm, em) = random_scene(&boxes, &spec);
            let gd = GridDims::new(item.0, item.1, item.2);
            let ch1 = stable_action_map(&hm, &em, gd, CheckerMode::ConvexHull1);
            let cha = stable_action_map(&hm, &em, gd, CheckerMode::ConvexHullAlpha);
            for (a, b) in cha.grid().as_slice().iter().zip(ch1.grid().as_slice()) {
                prop_assert!(!a || *b);
            }
            prop_assert_eq!(stable_action_map(&hm, &em, gd, CheckerMode::ConvexHullAlpha), cha);
        }
    }
}
