//! Voxel grid conventions, box dimensions, orientations and the heightmap.
//!
//! Grids are stored row-major with `y` selecting the row: cell `(x, y)` lives
//! at index `y * nx + x`. A box anchored at `(x, y)` with footprint `(w, d)`
//! covers columns `x..x + w` and rows `y..y + d`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_RESOLUTION: f64 = 0.005;

/// Bin size in meters plus the derived voxel counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub bin_w: f64,
    pub bin_d: f64,
    pub bin_h: f64,
    pub resolution: f64,
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl GridSpec {
    pub fn new(bin_w: f64, bin_d: f64, bin_h: f64, resolution: f64) -> Result<Self> {
        if !(resolution > 0.0) || !resolution.is_finite() {
            return Err(Error::InvalidGrid(format!("resolution {resolution} must be > 0")));
        }
        let cells = |dim: f64, name: &str| -> Result<usize> {
            if !(dim > 0.0) || !dim.is_finite() {
                return Err(Error::InvalidGrid(format!("{name} = {dim} must be > 0")));
            }
            let n = (dim / resolution).round();
            if n < 1.0 {
                return Err(Error::InvalidGrid(format!(
                    "{name} = {dim} is smaller than half a cell at resolution {resolution}"
                )));
            }
            Ok(n as usize)
        };
        Ok(Self {
            bin_w,
            bin_d,
            bin_h,
            resolution,
            nx: cells(bin_w, "bin_w")?,
            ny: cells(bin_d, "bin_d")?,
            nz: cells(bin_h, "bin_h")?,
        })
    }

    /// Spec from voxel counts, with the metric size derived from them.
    pub fn from_cells(nx: usize, ny: usize, nz: usize, resolution: f64) -> Result<Self> {
        Self::new(
            nx as f64 * resolution,
            ny as f64 * resolution,
            nz as f64 * resolution,
            resolution,
        )
    }

    pub fn bin_voxels(&self) -> u64 {
        (self.nx * self.ny * self.nz) as u64
    }

    pub fn cells(&self) -> usize {
        self.nx * self.ny
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::new(0.6, 0.6, 0.6, DEFAULT_RESOLUTION).expect("default grid is valid")
    }
}

/// Continuous item dimensions in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxDims {
    pub w: f64,
    pub d: f64,
    pub h: f64,
}

impl BoxDims {
    pub fn new(w: f64, d: f64, h: f64) -> Result<Self> {
        for v in [w, d, h] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidDims(format!("{w}x{d}x{h}: all dims must be > 0")));
            }
        }
        Ok(Self { w, d, h })
    }

    pub fn volume(&self) -> f64 {
        self.w * self.d * self.h
    }
}

/// Item dimensions in voxels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridDims {
    pub w: u32,
    pub d: u32,
    pub h: u32,
}

impl GridDims {
    pub fn new(w: u32, d: u32, h: u32) -> Self {
        assert!(w >= 1 && d >= 1 && h >= 1, "grid dims must be >= 1");
        Self { w, d, h }
    }

    pub fn volume(&self) -> u64 {
        self.w as u64 * self.d as u64 * self.h as u64
    }

    pub fn footprint(&self) -> (usize, usize) {
        (self.w as usize, self.d as usize)
    }

    pub fn sorted(&self) -> [u32; 3] {
        let mut s = [self.w, self.d, self.h];
        s.sort_unstable();
        s
    }

    pub fn fits(&self, spec: &GridSpec) -> bool {
        self.w as usize <= spec.nx && self.d as usize <= spec.ny && self.h as usize <= spec.nz
    }

    pub fn to_meters(&self, resolution: f64) -> BoxDims {
        BoxDims {
            w: self.w as f64 * resolution,
            d: self.d as f64 * resolution,
            h: self.h as f64 * resolution,
        }
    }
}

/// Number of voxels needed to cover `len` meters.
///
/// Ratios within 1e-9 of an integer snap to it so that metric values produced
/// by `cells * resolution` map back to `cells`.
pub fn cells_ceil(len: f64, resolution: f64) -> u32 {
    let q = len / resolution;
    let r = q.round();
    if (q - r).abs() <= 1e-9 * r.max(1.0) {
        r as u32
    } else {
        q.ceil() as u32
    }
}

/// Largest voxel count not exceeding `len` meters.
pub fn cells_floor(len: f64, resolution: f64) -> u32 {
    let q = len / resolution;
    let r = q.round();
    if (q - r).abs() <= 1e-9 * r.max(1.0) {
        r as u32
    } else {
        q.floor() as u32
    }
}

/// Discretizes metric dims with the conservative ceil rule. Fails with
/// [`Error::ItemTooLarge`] when no orientation fits the bin.
pub fn snap_dims(dims: BoxDims, spec: &GridSpec) -> Result<GridDims> {
    let dims = BoxDims::new(dims.w, dims.d, dims.h)?;
    let gd = GridDims::new(
        cells_ceil(dims.w, spec.resolution).max(1),
        cells_ceil(dims.d, spec.resolution).max(1),
        cells_ceil(dims.h, spec.resolution).max(1),
    );
    if Orientation::ALL.iter().any(|o| o.apply(gd).fits(spec)) {
        Ok(gd)
    } else {
        Err(Error::ItemTooLarge {
            w: dims.w,
            d: dims.d,
            h: dims.h,
        })
    }
}

/// One of the six axis permutations of `(w, d, h)`, indexed in lexicographic
/// permutation order: 0 = (w,d,h), 1 = (w,h,d), 2 = (d,w,h), 3 = (d,h,w),
/// 4 = (h,w,d), 5 = (h,d,w).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Orientation(u8);

const PERMUTATIONS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

impl Orientation {
    pub const COUNT: usize = 6;
    pub const ALL: [Orientation; 6] = [
        Orientation(0),
        Orientation(1),
        Orientation(2),
        Orientation(3),
        Orientation(4),
        Orientation(5),
    ];

    pub fn new(index: usize) -> Option<Self> {
        (index < Self::COUNT).then_some(Orientation(index as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn apply(self, gd: GridDims) -> GridDims {
        let src = [gd.w, gd.d, gd.h];
        let p = PERMUTATIONS[self.index()];
        GridDims::new(src[p[0]], src[p[1]], src[p[2]])
    }

    pub fn apply_metric(self, dims: BoxDims) -> BoxDims {
        let src = [dims.w, dims.d, dims.h];
        let p = PERMUTATIONS[self.index()];
        BoxDims {
            w: src[p[0]],
            d: src[p[1]],
            h: src[p[2]],
        }
    }
}

/// All orientations of `gd` in index order. With `dedup`, only the first
/// orientation producing each distinct dims triple is kept.
pub fn orientations_of(gd: GridDims, dedup: bool) -> Vec<(Orientation, GridDims)> {
    let mut out: Vec<(Orientation, GridDims)> = Vec::with_capacity(6);
    for o in Orientation::ALL {
        let od = o.apply(gd);
        if dedup && out.iter().any(|(_, seen)| *seen == od) {
            continue;
        }
        out.push((o, od));
    }
    out
}

/// Dense 2D grid, row-major in `y`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Grid<T> {
    nx: usize,
    ny: usize,
    cells: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn filled(nx: usize, ny: usize, value: T) -> Self {
        Self {
            nx,
            ny,
            cells: vec![value; nx * ny],
        }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(nx: usize, ny: usize, cells: Vec<T>) -> Self {
        assert_eq!(cells.len(), nx * ny, "grid size mismatch");
        Self { nx, ny, cells }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> &T {
        &self.cells[y * self.nx + x]
    }

    #[inline]
    pub fn get_mut(&mut self, x: usize, y: usize) -> &mut T {
        &mut self.cells[y * self.nx + x]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.cells
    }

    pub fn row(&self, y: usize) -> &[T] {
        &self.cells[y * self.nx..(y + 1) * self.nx]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.cells.chunks(self.nx.max(1))
    }
}

/// Checks that the `w x d` window at `(x, y)` lies inside an `nx x ny` grid.
pub fn check_window(nx: usize, ny: usize, anchor: (usize, usize), footprint: (usize, usize)) -> Result<()> {
    let (x, y) = anchor;
    let (w, d) = footprint;
    if w == 0 || d == 0 || x + w > nx || y + d > ny {
        return Err(Error::OutOfBounds { x, y, w, d, nx, ny });
    }
    Ok(())
}

/// Top-surface height of every column, in voxels.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Heightmap {
    grid: Grid<u32>,
    nz: u32,
}

impl Heightmap {
    pub fn empty(spec: &GridSpec) -> Self {
        Self {
            grid: Grid::filled(spec.nx, spec.ny, 0),
            nz: spec.nz as u32,
        }
    }

    pub fn from_grid(grid: Grid<u32>, nz: u32) -> Result<Self> {
        if let Some(bad) = grid.as_slice().iter().find(|&&h| h > nz) {
            return Err(Error::InvalidGrid(format!("height {bad} exceeds bin height {nz}")));
        }
        Ok(Self { grid, nz })
    }

    pub fn grid(&self) -> &Grid<u32> {
        &self.grid
    }

    pub fn nx(&self) -> usize {
        self.grid.nx
    }

    pub fn ny(&self) -> usize {
        self.grid.ny
    }

    pub fn nz(&self) -> u32 {
        self.nz
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> u32 {
        *self.grid.get(x, y)
    }

    /// Maximum height over the window; 0 on bare floor.
    pub fn window_max(&self, anchor: (usize, usize), footprint: (usize, usize)) -> Result<u32> {
        check_window(self.nx(), self.ny(), anchor, footprint)?;
        let (x, y) = anchor;
        let (w, d) = footprint;
        Ok((y..y + d)
            .flat_map(|row| self.grid.row(row)[x..x + w].iter().copied())
            .max()
            .unwrap_or(0))
    }

    /// Rests `gd` on the window maximum and raises its footprint. Returns the
    /// rest height. On error the heightmap is left untouched.
    pub fn place_mut(&mut self, anchor: (usize, usize), gd: GridDims) -> Result<u32> {
        let rest = self.window_max(anchor, gd.footprint())?;
        if rest + gd.h > self.nz {
            return Err(Error::HeightOverflow {
                rest,
                h: gd.h,
                nz: self.nz,
            });
        }
        let (x, y) = anchor;
        let top = rest + gd.h;
        for row in y..y + gd.d as usize {
            let nx = self.grid.nx;
            self.grid.cells[row * nx + x..row * nx + x + gd.w as usize].fill(top);
        }
        Ok(rest)
    }

    pub fn total(&self) -> u64 {
        self.grid.cells.iter().map(|&h| h as u64).sum()
    }
}

pub fn window_max(hm: &Heightmap, anchor: (usize, usize), footprint: (usize, usize)) -> Result<u32> {
    hm.window_max(anchor, footprint)
}

/// Pure placement: returns the new heightmap and the rest height.
pub fn place_box(hm: &Heightmap, anchor: (usize, usize), gd: GridDims) -> Result<(Heightmap, u32)> {
    let mut next = hm.clone();
    let rest = next.place_mut(anchor, gd)?;
    Ok((next, rest))
}
