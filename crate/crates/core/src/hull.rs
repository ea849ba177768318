//! Integer convex hulls (Andrew's monotone chain) and the point-in-hull test
//! used by the stability checks.

use serde::{Deserialize, Serialize};

/// A window-local cell coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: i64,
    pub y: i64,
}

impl Cell {
    pub const fn new(x: i64, y: i64) -> Self {
        Self { x, y }
    }
}

/// A point with half-cell precision, stored doubled: `(x2 / 2, y2 / 2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HalfPoint {
    pub x2: i64,
    pub y2: i64,
}

impl HalfPoint {
    pub const fn new(x2: i64, y2: i64) -> Self {
        Self { x2, y2 }
    }

    /// Geometric center of a `w x d` footprint whose cells sit at integer
    /// coordinates `0..w`, `0..d`: `((w - 1) / 2, (d - 1) / 2)`.
    pub fn window_center(w: usize, d: usize) -> Self {
        Self::new(w as i64 - 1, d as i64 - 1)
    }

    pub fn from_cell(c: Cell) -> Self {
        Self::new(2 * c.x, 2 * c.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HullKind {
    Empty,
    Point,
    Segment,
    Polygon,
}

/// Convex polygon with counterclockwise, strictly convex vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HullPolygon {
    vertices: Vec<Cell>,
}

impl HullPolygon {
    pub fn vertices(&self) -> &[Cell] {
        &self.vertices
    }

    pub fn kind(&self) -> HullKind {
        match self.vertices.len() {
            0 => HullKind::Empty,
            1 => HullKind::Point,
            2 => HullKind::Segment,
            _ => HullKind::Polygon,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.kind() != HullKind::Polygon
    }

    /// Twice the signed area (positive for counterclockwise order).
    pub fn area2(&self) -> i64 {
        let n = self.vertices.len();
        if n < 3 {
            return 0;
        }
        (0..n)
            .map(|i| {
                let a = self.vertices[i];
                let b = self.vertices[(i + 1) % n];
                a.x * b.y - a.y * b.x
            })
            .sum()
    }
}

#[inline]
fn cross(o: Cell, a: Cell, b: Cell) -> i64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

/// Hull of `points`. Duplicates and collinear boundary points are dropped.
pub fn convex_hull(points: &[Cell]) -> HullPolygon {
    let mut pts = points.to_vec();
    pts.sort_unstable();
    pts.dedup();
    convex_hull_sorted(&pts)
}

/// Monotone chain over points already sorted by `(x, y)` without duplicates.
pub(crate) fn convex_hull_sorted(pts: &[Cell]) -> HullPolygon {
    let mut vertices = Vec::with_capacity(2 * pts.len());
    hull_sorted_into(pts, &mut vertices);
    HullPolygon { vertices }
}

/// Monotone chain over pre-sorted, distinct points, writing the CCW vertices
/// into `hull` (cleared first).
pub(crate) fn hull_sorted_into(pts: &[Cell], hull: &mut Vec<Cell>) {
    hull.clear();
    let n = pts.len();
    if n <= 1 {
        hull.extend_from_slice(pts);
        return;
    }
    for &p in pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    if hull.len() == 2 && hull[0] == hull[1] {
        hull.pop();
    }
}

/// [`center_in_hull`] over a bare CCW vertex list.
pub(crate) fn center_in_vertices(v: &[Cell], center: HalfPoint) -> bool {
    let n = v.len();
    n >= 3
        && (0..n).all(|i| {
            let a = v[i];
            let b = v[(i + 1) % n];
            let (ax, ay) = (2 * a.x, 2 * a.y);
            let (bx, by) = (2 * b.x, 2 * b.y);
            (bx - ax) * (center.y2 - ay) - (by - ay) * (center.x2 - ax) >= 0
        })
}

/// True iff `center` lies inside or on the boundary of a non-degenerate hull.
/// Points and segments never contain the center.
pub fn center_in_hull(hull: &HullPolygon, center: HalfPoint) -> bool {
    !hull.is_degenerate() && center_in_vertices(hull.vertices(), center)
}
