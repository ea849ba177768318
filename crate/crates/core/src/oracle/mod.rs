//! Static-equilibrium stability judge.
//!
//! Every box is a rigid body with its weight at the center of mass. Contacts
//! are horizontal overlap rectangles between a box's bottom face and the top
//! face of a box (or the floor) at the same height. Each contact carries
//! non-negative vertical forces at its four corners, which span every
//! non-negative force distribution over the rectangle. The scene is stable iff
//! some choice of forces balances the vertical force and both horizontal
//! moments of every box.

pub mod lp;

use num_rational::BigRational;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::scene::PlacedBox;
use lp::{LinearSystem, LpOutcome, Simplex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Support {
    Ground,
    Box(usize),
}

/// Overlap of a box's bottom face with a supporting face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Contact {
    pub upper: usize,
    pub lower: Support,
    pub height: u32,
    /// `[x0, x1) x [y0, y1)` in cell-corner coordinates.
    pub rect: (i64, i64, i64, i64),
}

impl Contact {
    /// Rectangle corners, doubled to match center-of-mass coordinates.
    pub fn corners2(&self) -> [(i64, i64); 4] {
        let (x0, x1, y0, y1) = self.rect;
        [
            (2 * x0, 2 * y0),
            (2 * x1, 2 * y0),
            (2 * x1, 2 * y1),
            (2 * x0, 2 * y1),
        ]
    }

    pub fn area(&self) -> i64 {
        (self.rect.1 - self.rect.0) * (self.rect.3 - self.rect.2)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactGraph {
    pub boxes: Vec<PlacedBox>,
    pub contacts: Vec<Contact>,
}

fn overlap(a: (i64, i64, i64, i64), b: (i64, i64, i64, i64)) -> Option<(i64, i64, i64, i64)> {
    let x0 = a.0.max(b.0);
    let x1 = a.1.min(b.1);
    let y0 = a.2.max(b.2);
    let y1 = a.3.min(b.3);
    (x0 < x1 && y0 < y1).then_some((x0, x1, y0, y1))
}

/// Extracts support contacts. Fails if two boxes share volume.
pub fn build_contacts(boxes: &[PlacedBox]) -> Result<ContactGraph> {
    let mut contacts = Vec::new();
    for (i, a) in boxes.iter().enumerate() {
        let fa = a.footprint_rect();
        if a.z == 0 {
            contacts.push(Contact {
                upper: i,
                lower: Support::Ground,
                height: 0,
                rect: fa,
            });
        }
        for (j, b) in boxes.iter().enumerate() {
            if i == j {
                continue;
            }
            let Some(rect) = overlap(fa, b.footprint_rect()) else {
                continue;
            };
            if i < j && a.z < b.top() && b.z < a.top() {
                return Err(Error::ModelCorruption(format!("boxes {i} and {j} interpenetrate")));
            }
            if b.top() == a.z {
                contacts.push(Contact {
                    upper: i,
                    lower: Support::Box(j),
                    height: a.z,
                    rect,
                });
            }
        }
    }
    Ok(ContactGraph {
        boxes: boxes.to_vec(),
        contacts,
    })
}

impl ContactGraph {
    /// Equality system over the corner forces: per box, force balance and the
    /// two moment balances about its center of mass. Masses are multiplied by
    /// `mass_scale`.
    pub fn equilibrium_system(&self, mass_scale: i64) -> LinearSystem {
        let n = self.boxes.len();
        let vars = 4 * self.contacts.len();
        let mut rows = vec![vec![0i64; vars]; 3 * n];
        for (k, c) in self.contacts.iter().enumerate() {
            for (corner, &(px, py)) in c.corners2().iter().enumerate() {
                let var = 4 * k + corner;
                let mut apply = |body: usize, sign: i64| {
                    let (cx, cy) = self.boxes[body].com2();
                    rows[3 * body][var] += sign;
                    rows[3 * body + 1][var] += sign * (px - cx);
                    rows[3 * body + 2][var] += sign * (py - cy);
                };
                apply(c.upper, 1);
                if let Support::Box(lower) = c.lower {
                    apply(lower, -1);
                }
            }
        }
        let mut sys = LinearSystem::new(vars);
        for (b, chunk) in rows.chunks(3).enumerate() {
            let mass = self.boxes[b].mass() * mass_scale;
            sys.push_row(chunk[0].clone(), mass);
            sys.push_row(chunk[1].clone(), 0);
            sys.push_row(chunk[2].clone(), 0);
        }
        sys
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub stable: bool,
    /// Lowest box index whose addition made the placement-order prefix
    /// infeasible.
    pub first_infeasible: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub diagnostic: Option<String>,
}

/// Feasibility judge parameterized by the pivoting scalar.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EquilibriumOracle<T> {
    /// Multiplies every box mass.
    pub mass_scale: i64,
    /// Re-solve in exact rationals when the floating answer is degenerate.
    pub exact_fallback: bool,
    _scalar: std::marker::PhantomData<T>,
}

impl<T: Scalar> Default for EquilibriumOracle<T> {
    fn default() -> Self {
        Self {
            mass_scale: 1,
            exact_fallback: true,
            _scalar: std::marker::PhantomData,
        }
    }
}

/// Outcome of one feasibility solve.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Feasibility {
    Stable,
    Unstable,
    Degenerate(String),
}

impl<T: Scalar> EquilibriumOracle<T> {
    pub fn with_mass_scale(mass_scale: i64) -> Self {
        Self {
            mass_scale,
            ..Self::default()
        }
    }

    pub fn without_fallback(mut self) -> Self {
        self.exact_fallback = false;
        self
    }

    /// Feasibility of the whole graph.
    pub fn feasibility(&self, graph: &ContactGraph) -> Feasibility {
        let sys = graph.equilibrium_system(self.mass_scale);
        match Simplex::<T>::solve(&sys) {
            LpOutcome::Feasible(_) => Feasibility::Stable,
            LpOutcome::Infeasible => Feasibility::Unstable,
            LpOutcome::Degenerate(why) if self.exact_fallback && !T::EXACT => {
                match Simplex::<BigRational>::solve(&sys) {
                    LpOutcome::Feasible(_) => Feasibility::Stable,
                    LpOutcome::Infeasible => Feasibility::Unstable,
                    LpOutcome::Degenerate(exact) => Feasibility::Degenerate(format!("{why}; exact: {exact}")),
                }
            }
            LpOutcome::Degenerate(why) => Feasibility::Degenerate(why),
        }
    }

    fn prefix_stable(&self, boxes: &[PlacedBox]) -> Result<bool> {
        let graph = build_contacts(boxes)?;
        Ok(self.feasibility(&graph) == Feasibility::Stable)
    }

    /// Verdict for a whole scene. When unstable, the blamed box is the first
    /// placement-order prefix that is infeasible.
    pub fn equilibrium_feasible(&self, graph: &ContactGraph) -> Result<StabilityVerdict> {
        match self.feasibility(graph) {
            Feasibility::Stable => Ok(StabilityVerdict {
                stable: true,
                first_infeasible: None,
                diagnostic: None,
            }),
            outcome => {
                let diagnostic = match outcome {
                    Feasibility::Degenerate(why) => Some(why),
                    _ => None,
                };
                let mut first = graph.boxes.len().checked_sub(1);
                for k in 0..graph.boxes.len().saturating_sub(1) {
                    if !self.prefix_stable(&graph.boxes[..=k])? {
                        first = Some(k);
                        break;
                    }
                }
                Ok(StabilityVerdict {
                    stable: false,
                    first_infeasible: first,
                    diagnostic,
                })
            }
        }
    }

    pub fn judge(&self, boxes: &[PlacedBox]) -> Result<StabilityVerdict> {
        self.equilibrium_feasible(&build_contacts(boxes)?)
    }

    /// Verdict after each placement of `boxes`, in order. A placement whose
    /// post-state is infeasible is a fall, blamed on the first infeasible
    /// prefix.
    pub fn settle_check(&self, boxes: &[PlacedBox]) -> Result<Vec<StabilityVerdict>> {
        let mut out = Vec::with_capacity(boxes.len());
        let mut first_bad: Option<usize> = None;
        for t in 0..boxes.len() {
            let graph = build_contacts(&boxes[..=t])?;
            let verdict = match self.feasibility(&graph) {
                Feasibility::Stable => StabilityVerdict {
                    stable: true,
                    first_infeasible: None,
                    diagnostic: None,
                },
                other => {
                    let first = *first_bad.get_or_insert(t);
                    StabilityVerdict {
                        stable: false,
                        first_infeasible: Some(first),
                        diagnostic: match other {
                            Feasibility::Degenerate(why) => Some(why),
                            _ => None,
                        },
                    }
                }
            };
            if verdict.stable {
                first_bad = None;
            }
            out.push(verdict);
        }
        Ok(out)
    }
}
