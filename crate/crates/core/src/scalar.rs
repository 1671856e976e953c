//! Scalar abstraction for the analytic parts of the model.
//!
//! Moments, renewal functions and the stationary mean/variance are plain
//! field arithmetic, so they are written once over [`Scalar`] and can be
//! evaluated in `f64`, `f32` or exactly in [`BigRational`]. Everything that
//! needs transcendental functions or random draws works in `f64`.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive, Zero};

/// Numeric type usable as a probability weight.
pub trait Scalar:
    Clone + Debug + PartialOrd + Num + Signed + FromPrimitive + ToPrimitive + Send + Sync + 'static
{
    /// Largest accepted deviation of a normalized weight vector from one.
    fn sum_tolerance() -> Self;

    /// False for NaN and infinities. Exact types are always finite.
    fn is_finite_value(&self) -> bool;

    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("integer representable in scalar type")
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Converts a finite `f64`; exact types take the binary value verbatim.
    fn from_f64_value(x: f64) -> Option<Self> {
        Self::from_f64(x)
    }
}

impl Scalar for f64 {
    fn sum_tolerance() -> Self {
        1e-12
    }

    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl Scalar for f32 {
    fn sum_tolerance() -> Self {
        1e-5
    }

    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl Scalar for BigRational {
    fn sum_tolerance() -> Self {
        BigRational::zero()
    }

    fn is_finite_value(&self) -> bool {
        true
    }
}

/// Exact rational `numer / denom`.
pub fn ratio(numer: i64, denom: i64) -> BigRational {
    BigRational::new(BigInt::from(numer), BigInt::from(denom))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_from_f64_is_exact_for_dyadics() {
        let half = BigRational::from_f64_value(0.5).unwrap();
        assert_eq!(half, ratio(1, 2));
        assert_eq!(half.to_f64_lossy(), 0.5);
    }

    #[test]
    fn float_finiteness() {
        assert!(!f64::NAN.is_finite_value());
        assert!(1.0f32.is_finite_value());
    }
}
