//! Scalar abstractions shared by the planner and the soft decoder.
//!
//! Rate and budget arithmetic is written once against [`Scalar`], which is
//! implemented for `f32`, `f64` and the exact [`Rational64`]. Every published
//! parameter (coding factor, control factor, code rate, cell load) is a ratio
//! of small integers, so the rational backend evaluates the rate formulas
//! without rounding.
//!
//! Soft values in the decoder only need [`LlrScalar`], a thin alias over
//! [`num_traits::Float`].

use std::fmt::{Debug, Display};

use num_rational::Rational64;
use num_traits::{Float, FromPrimitive, Signed, ToPrimitive};

/// Number type the fronthaul arithmetic is generic over.
pub trait Scalar: Signed + Clone + PartialOrd + Debug + Display + Send + Sync + 'static {
    /// Builds `num / den`. `den` must be non-zero.
    fn from_ratio(num: i64, den: i64) -> Self;

    /// Lossy conversion for presentation and tolerance checks.
    fn to_f64(&self) -> f64;

    /// Exact conversion from a small unsigned count.
    fn from_count(n: u32) -> Self {
        Self::from_ratio(i64::from(n), 1)
    }

    /// Equality up to a relative tolerance for floats, exact for rationals.
    fn approx_eq(&self, other: &Self) -> bool;
}

macro_rules! float_scalar {
    ($t:ty, $eps:expr) => {
        impl Scalar for $t {
            fn from_ratio(num: i64, den: i64) -> Self {
                num as $t / den as $t
            }

            fn to_f64(&self) -> f64 {
                f64::from(*self)
            }

            fn approx_eq(&self, other: &Self) -> bool {
                let scale = self.abs().max(other.abs()).max(1.0);
                (self - other).abs() <= $eps * scale
            }
        }
    };
}

float_scalar!(f32, 1e-5);
float_scalar!(f64, 1e-12);

impl Scalar for Rational64 {
    fn from_ratio(num: i64, den: i64) -> Self {
        Rational64::new(num, den)
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn approx_eq(&self, other: &Self) -> bool {
        self == other
    }
}

/// Soft-value type for log-likelihood ratios.
pub trait LlrScalar: Float + FromPrimitive + Debug + Default + Send + Sync + 'static {}

impl<T> LlrScalar for T where T: Float + FromPrimitive + Debug + Default + Send + Sync + 'static {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_is_exact() {
        let a = Rational64::from_ratio(10, 8);
        let b = Rational64::from_ratio(5, 4);
        assert!(a.approx_eq(&b));
        assert!(!a.approx_eq(&Rational64::from_ratio(66, 64)));
    }

    #[test]
    fn float_tolerance_is_relative() {
        assert!(2457.6f64.approx_eq(&(2457.6 + 1e-10)));
        assert!(!2457.6f64.approx_eq(&2457.7));
        assert!(0.7f32.approx_eq(&(7.0 / 10.0)));
    }
}
