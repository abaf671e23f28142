//! Scalar abstraction shared by the math modules.

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};
use serde::{de::DeserializeOwned, Serialize};

/// Floating point scalar usable throughout the dynamics and control code.
///
/// Math goes through nalgebra's `RealField` (so vectors and quaternions work
/// unchanged); conversions go through num-traits.
pub trait Real: RealField + Copy + FromPrimitive + ToPrimitive + Default + Serialize + DeserializeOwned {
    /// Converts an `f64` literal. Never fails for the provided impls.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn clamp_to(self, lo: Self, hi: Self) -> Self {
        if self < lo {
            lo
        } else if self > hi {
            hi
        } else {
            self
        }
    }

    /// `1`, `-1`, or `0` (unlike `signum`, zero maps to zero).
    #[inline]
    fn sign0(self) -> Self {
        if self > Self::zero() {
            Self::one()
        } else if self < Self::zero() {
            -Self::one()
        } else {
            Self::zero()
        }
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign0_maps_zero_to_zero() {
        assert_eq!(0.0f64.sign0(), 0.0);
        assert_eq!((-0.0f64).sign0(), 0.0);
        assert_eq!(3.0f32.sign0(), 1.0);
        assert_eq!((-2.0f64).sign0(), -1.0);
    }

    #[test]
    fn clamp_to_bounds() {
        assert_eq!(5.0f64.clamp_to(-1.0, 1.0), 1.0);
        assert_eq!((-5.0f64).clamp_to(-1.0, 1.0), -1.0);
        assert_eq!(0.25f64.clamp_to(-1.0, 1.0), 0.25);
    }
}
