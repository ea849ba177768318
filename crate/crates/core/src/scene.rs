//! Bin contents: heightmap, empty map and the list of placed boxes, kept in
//! lockstep.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{GridDims, GridSpec, Heightmap};
use crate::stability::EmptyMap;

/// A box at rest in the bin, in voxel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlacedBox {
    pub x: usize,
    pub y: usize,
    /// Height of the bottom face.
    pub z: u32,
    pub dims: GridDims,
    /// Mass per voxel.
    pub density: i64,
    /// Offset of the center of mass from the geometric center, in half cells.
    pub com_offset2: (i64, i64),
}

impl PlacedBox {
    pub fn new(x: usize, y: usize, z: u32, dims: GridDims) -> Self {
        Self {
            x,
            y,
            z,
            dims,
            density: 1,
            com_offset2: (0, 0),
        }
    }

    pub fn top(&self) -> u32 {
        self.z + self.dims.h
    }

    pub fn mass(&self) -> i64 {
        self.density * self.dims.volume() as i64
    }

    /// Center of mass in doubled cell-corner coordinates.
    pub fn com2(&self) -> (i64, i64) {
        (
            2 * self.x as i64 + self.dims.w as i64 + self.com_offset2.0,
            2 * self.y as i64 + self.dims.d as i64 + self.com_offset2.1,
        )
    }

    /// Footprint as `[x0, x1) x [y0, y1)` in cell-corner coordinates.
    pub fn footprint_rect(&self) -> (i64, i64, i64, i64) {
        (
            self.x as i64,
            self.x as i64 + self.dims.w as i64,
            self.y as i64,
            self.y as i64 + self.dims.d as i64,
        )
    }
}

/// Result of one placement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Placement {
    pub rest: u32,
    /// Voxels newly trapped under the box.
    pub gap_voxels: u64,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    spec: GridSpec,
    heightmap: Heightmap,
    empty: EmptyMap,
    boxes: Vec<PlacedBox>,
}

impl Scene {
    pub fn new(spec: GridSpec) -> Self {
        Self {
            heightmap: Heightmap::empty(&spec),
            empty: EmptyMap::empty(&spec),
            boxes: Vec::new(),
            spec,
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn heightmap(&self) -> &Heightmap {
        &self.heightmap
    }

    pub fn empty_map(&self) -> &EmptyMap {
        &self.empty
    }

    pub fn boxes(&self) -> &[PlacedBox] {
        &self.boxes
    }

    pub fn placed_volume(&self) -> u64 {
        self.boxes.iter().map(|b| b.dims.volume()).sum()
    }

    /// Rests `gd` on the window maximum at `anchor`. The empty map is updated
    /// from the pre-placement heightmap before the heightmap changes.
    pub fn place(&mut self, anchor: (usize, usize), gd: GridDims) -> Result<Placement> {
        let rest = self.heightmap.window_max(anchor, gd.footprint())?;
        if rest + gd.h > self.heightmap.nz() {
            return Err(Error::HeightOverflow {
                rest,
                h: gd.h,
                nz: self.heightmap.nz(),
            });
        }
        let gap_voxels = self.empty.update_mut(&self.heightmap, anchor, gd)?;
        self.heightmap.place_mut(anchor, gd)?;
        self.boxes.push(PlacedBox::new(anchor.0, anchor.1, rest, gd));
        Ok(Placement {
            rest,
            gap_voxels,
            index: self.boxes.len() - 1,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scene_tracks_boxes_and_gaps() {
        let spec = GridSpec::from_cells(10, 10, 30, 0.005).unwrap();
        let mut s = Scene::new(spec);
        s.place((0, 0), GridDims::new(2, 4, 10)).unwrap();
        s.place((2, 0), GridDims::new(2, 4, 8)).unwrap();
        let p = s.place((0, 0), GridDims::new(4, 4, 2)).unwrap();
        assert_eq!(p, Placement { rest: 10, gap_voxels: 16, index: 2 });
        assert_eq!(s.boxes()[2].z, 10);
        assert_eq!(s.empty_map().total(), 16);
        assert_eq!(s.heightmap().total(), s.placed_volume() + s.empty_map().total());
        let before = s.clone();
        assert!(s.place((0, 0), GridDims::new(2, 2, 20)).is_err());
        assert_eq!(s, before);
    }

    #[test]
    fn com_and_rect() {
        let b = PlacedBox::new(2, 3, 0, GridDims::new(4, 5, 1));
        assert_eq!(b.com2(), (8, 11));
        assert_eq!(b.footprint_rect(), (2, 6, 3, 8));
        assert_eq!(b.mass(), 20);
    }
}
