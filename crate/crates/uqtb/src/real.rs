//! Scalar abstraction for the numerical core.
//!
//! Everything numeric in this crate is generic over [`Real`], a float-like
//! scalar. `f64` is the intended precision for the benchmark tolerances;
//! `f32` compiles and runs but cannot reach the default quadrature targets.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::float::FloatConst;
use num_traits::Float;

/// Floating-point scalar usable throughout the kernels and statistics.
/// `LowerExp` supports full-precision table output.
///
/// Blanket-implemented for any type satisfying the bounds, in particular
/// `f32` and `f64`.
pub trait Real: Float + FloatConst + Debug + Display + LowerExp + Send + Sync + 'static {}

impl<T> Real for T where T: Float + FloatConst + Debug + Display + LowerExp + Send + Sync + 'static {}

/// Converts an `f64` literal into `T`.
///
/// Panics if the value is not representable, which cannot happen for the
/// finite constants used in this crate.
#[inline]
pub(crate) fn lit<T: Real>(x: f64) -> T {
    T::from(x).expect("finite literal must convert")
}

/// Converts a count into `T` exactly (counts stay far below the mantissa width).
#[inline]
pub(crate) fn count<T: Real>(n: usize) -> T {
    T::from(n).expect("count must convert")
}
