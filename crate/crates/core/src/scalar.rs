//! Numeric abstraction shared by the LP engine, the calibration fits and the
//! NLMS predictor.
//!
//! Floating types carry tolerances; the exact rational type uses zero
//! tolerances so that the simplex runs in exact arithmetic.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive, Zero};

/// A scalar the simplex and the fits can run on: `f32`, `f64` or
/// [`BigRational`].
pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialOrd
    + Num
    + Signed
    + FromPrimitive
    + ToPrimitive
    + Send
    + Sync
    + 'static
{
    /// Primal feasibility tolerance.
    fn feasibility_tolerance() -> Self;
    /// Reduced-cost tolerance used to decide optimality.
    fn optimality_tolerance() -> Self;
    /// Smallest magnitude accepted as a pivot element.
    fn pivot_tolerance() -> Self;
    /// Magnitudes below this are flushed to zero after elimination.
    fn drop_tolerance() -> Self;
    fn is_finite_value(&self) -> bool;

    /// Lossy conversion used when importing `f64` problem data.
    fn from_f64_lossy(value: f64) -> Option<Self> {
        Self::from_f64(value)
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Flush `self` to exact zero when it is within the drop tolerance.
    fn flushed(self) -> Self {
        if self.abs() <= Self::drop_tolerance() {
            Self::zero()
        } else {
            self
        }
    }
}

impl Scalar for f64 {
    fn feasibility_tolerance() -> Self {
        1e-7
    }
    fn optimality_tolerance() -> Self {
        1e-9
    }
    fn pivot_tolerance() -> Self {
        1e-9
    }
    fn drop_tolerance() -> Self {
        1e-12
    }
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl Scalar for f32 {
    fn feasibility_tolerance() -> Self {
        1e-4
    }
    fn optimality_tolerance() -> Self {
        1e-5
    }
    fn pivot_tolerance() -> Self {
        1e-5
    }
    fn drop_tolerance() -> Self {
        1e-7
    }
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl Scalar for BigRational {
    fn feasibility_tolerance() -> Self {
        BigRational::zero()
    }
    fn optimality_tolerance() -> Self {
        BigRational::zero()
    }
    fn pivot_tolerance() -> Self {
        BigRational::zero()
    }
    fn drop_tolerance() -> Self {
        BigRational::zero()
    }
    fn is_finite_value(&self) -> bool {
        true
    }
    fn from_f64_lossy(value: f64) -> Option<Self> {
        BigRational::from_float(value)
    }
}

/// Exact rational from an integer numerator and denominator.
pub fn ratio(numer: i64, denom: i64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}
