//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use realfft::FftNum;

/// Real floating-point scalar: `f32` or `f64`.
///
/// Tolerances quoted throughout the documentation assume `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + FftNum
    + LinalgScalar
    + ScalarOperand
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal, panicking only if the value is not representable at all.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal not representable")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("integer not representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Wraps a phase into `]-pi, pi]`.
pub fn wrap_phase<T: Real>(x: T) -> T {
    let two_pi = T::TAU();
    let r = x - two_pi * ((x - T::PI()) / two_pi).ceil();
    if r <= -T::PI() {
        r + two_pi
    } else if r > T::PI() {
        r - two_pi
    } else {
        r
    }
}
