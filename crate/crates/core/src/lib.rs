//! Online 3D bin packing on a voxel heightmap: stability-masked placement,
//! an equilibrium oracle for judging falls, baseline policies and an agent
//! protocol.

pub mod datasets;
pub mod env;
pub mod error;
pub mod geometry;
pub mod hull;
pub mod mapio;
pub mod oracle;
pub mod policies;
pub mod protocol;
pub mod runner;
pub mod scalar;
pub mod scene;
pub mod stability;
pub mod trace;

pub use error::{Error, Result};

use num_rational::{BigRational, Rational64};

/// Equilibrium oracle pivoting in `f64`, falling back to exact rationals on
/// degenerate solves.
pub type Oracle = oracle::EquilibriumOracle<f64>;
/// Equilibrium oracle pivoting in exact rationals throughout.
pub type ExactOracle = oracle::EquilibriumOracle<BigRational>;
/// Exact fraction type for reward and utilization accounting.
pub type Fraction = Rational64;
