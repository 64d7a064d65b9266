//! Entire helper functions on the complex plane.
//!
//! The closed-form expectation of the collided flux under a uniformly
//! distributed scattering ratio averages `c * exp(c * mu)` analytically,
//! which produces `sinh(z)/z` and its derivative evaluated at complex
//! arguments that can be arbitrarily small. Both are entire, but the naive
//! quotients lose all significance near `z = 0`; below `|z| = 1/2` the
//! Taylor series is exact to working precision in a handful of terms.

use num_complex::Complex;

use crate::real::{count, lit, Real};

/// `sinh(z) / z`, continued through `z = 0` where it equals 1.
pub fn sinhc<T: Real>(z: Complex<T>) -> Complex<T> {
    if z.norm() >= lit(0.5) {
        return z.sinh() / z;
    }
    // sum over m of z^{2m} / (2m + 1)!
    let z2 = z * z;
    let mut term = Complex::new(T::one(), T::zero());
    let mut sum = term;
    for m in 1..40 {
        term = term * z2 / (count::<T>(2 * m) * count::<T>(2 * m + 1));
        sum = sum + term;
        if term.norm() <= sum.norm() * T::epsilon() {
            break;
        }
    }
    sum
}

/// Derivative of [`sinhc`]: `(z cosh(z) - sinh(z)) / z^2`, vanishing at 0.
///
/// The numerator cancels to third order, so the direct quotient is only
/// used where `|z|` is large enough to keep the loss under a digit.
pub fn sinhc_deriv<T: Real>(z: Complex<T>) -> Complex<T> {
    if z.norm() >= lit(0.5) {
        return (z * z.cosh() - z.sinh()) / (z * z);
    }
    // z * sum over m of z^{2m} (2m + 2) / (2m + 3)!
    let z2 = z * z;
    let third = Complex::new(T::one() / count::<T>(3), T::zero());
    let mut term = third;
    let mut sum = term;
    for m in 1..40 {
        // ratio of consecutive coefficients: 1 / ((2m) (2m + 3))
        term = term * z2 / (count::<T>(2 * m) * count::<T>(2 * m + 3));
        sum = sum + term;
        if term.norm() <= sum.norm() * T::epsilon() {
            break;
        }
    }
    sum * z
}
