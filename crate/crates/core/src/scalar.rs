//! Scalar abstraction shared by every numerical module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Floating point type the spectral machinery is generic over: `f32` or `f64`.
///
/// The tolerances quoted throughout the crate (1e-10 round trips, 1e-12
/// propagator agreement) assume `f64`; `f32` works but only to its own
/// precision.
pub trait Real: Float + FloatConst + FromPrimitive + ToPrimitive + FftNum + Sum + Default + Debug + Display {
    /// Converts an `f64` literal. Panics only for values the type cannot hold.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn of_usize(x: usize) -> Self {
        Self::from_usize(x).expect("index representable in scalar type")
    }

    #[inline]
    fn of_i64(x: i64) -> Self {
        Self::from_i64(x).expect("index representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
