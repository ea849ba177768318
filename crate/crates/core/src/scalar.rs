//! Scalar abstraction shared by the numeric parts of the engine.
//!
//! Grid geometry is integer-only. The places that need a field (reward
//! fractions and the equilibrium linear program) are generic over [`Scalar`],
//! which is implemented for `f32`, `f64` and the exact rationals
//! [`num_rational::Rational64`] and [`num_rational::BigRational`].

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{Signed, ToPrimitive, Zero};

pub trait Scalar: Clone + Debug + PartialOrd + Signed + Send + Sync + 'static {
    /// True for rational types where comparisons are exact.
    const EXACT: bool;

    fn from_i64(v: i64) -> Self;

    fn to_f64(&self) -> f64;

    /// Magnitude below which a value is treated as zero. Zero for exact types.
    fn tolerance() -> Self;

    fn ratio(num: i64, den: i64) -> Self {
        Self::from_i64(num) / Self::from_i64(den)
    }

    fn near_zero(&self) -> bool {
        self.abs() <= Self::tolerance()
    }

    fn definitely_positive(&self) -> bool {
        *self > Self::tolerance()
    }

    fn definitely_negative(&self) -> bool {
        *self < -Self::tolerance()
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn tolerance() -> Self {
        1e-9
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn from_i64(v: i64) -> Self {
        v as f32
    }

    fn to_f64(&self) -> f64 {
        *self as f64
    }

    fn tolerance() -> Self {
        1e-4
    }
}

impl Scalar for Rational64 {
    const EXACT: bool = true;

    fn from_i64(v: i64) -> Self {
        Rational64::from_integer(v)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn tolerance() -> Self {
        Rational64::zero()
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn tolerance() -> Self {
        BigRational::zero()
    }
}
