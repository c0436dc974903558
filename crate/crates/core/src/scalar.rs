//! Scalar abstraction shared by every numeric routine in the crate.

use nalgebra::RealField;
use num_traits::{FloatConst, FromPrimitive, ToPrimitive};

/// Real scalar used for intensities, coordinates and all derived geometry.
///
/// Implemented for `f32` and `f64`.
pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + FloatConst + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Panics only on values the type cannot hold.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn from_usize_exact(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    fn is_finite_value(self) -> bool;

    fn infinity() -> Self;
}

impl Real for f32 {
    fn is_finite_value(self) -> bool {
        self.is_finite()
    }

    fn infinity() -> Self {
        f32::INFINITY
    }
}

impl Real for f64 {
    fn is_finite_value(self) -> bool {
        self.is_finite()
    }

    fn infinity() -> Self {
        f64::INFINITY
    }
}
