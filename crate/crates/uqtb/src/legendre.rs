//! Legendre polynomials, the chaos basis for a uniformly distributed
//! parameter on `[-1, 1]`.
//!
//! `P_0(x) = 1`, `P_1(x) = x`, and
//! `(k + 1) P_{k+1}(x) = (2k + 1) x P_k(x) - k P_{k-1}(x)`.
//! Orthogonality: the integral of `P_i P_j` over `[-1, 1]` is
//! `2 / (2j + 1)` when `i == j` and zero otherwise.

use crate::real::{count, Real};

/// Evaluates `P_j(x)` by the three-term recurrence.
pub fn eval<T: Real>(j: usize, x: T) -> T {
    if j == 0 {
        return T::one();
    }
    let mut p_prev = T::one();
    let mut p = x;
    for k in 1..j {
        let kk = count::<T>(k);
        let next = ((kk + kk + T::one()) * x * p - kk * p_prev) / (kk + T::one());
        p_prev = p;
        p = next;
    }
    p
}

/// Fills `out[j] = P_j(x)` for `j = 0..out.len()` in one recurrence sweep.
pub fn eval_all<T: Real>(x: T, out: &mut [T]) {
    if out.is_empty() {
        return;
    }
    out[0] = T::one();
    if out.len() == 1 {
        return;
    }
    out[1] = x;
    for k in 1..out.len() - 1 {
        let kk = count::<T>(k);
        out[k + 1] = ((kk + kk + T::one()) * x * out[k] - kk * out[k - 1]) / (kk + T::one());
    }
}

/// Evaluates the truncated series `sum_j coeffs[j] * P_j(x)` without
/// materializing the basis values.
pub fn eval_series<T: Real>(coeffs: &[T], x: T) -> T {
    let mut acc = T::zero();
    let mut p_prev = T::one();
    let mut p = x;
    for (k, &a) in coeffs.iter().enumerate() {
        let basis = match k {
            0 => T::one(),
            1 => x,
            _ => {
                let kk = count::<T>(k - 1);
                let next = ((kk + kk + T::one()) * x * p - kk * p_prev) / (kk + T::one());
                p_prev = p;
                p = next;
                p
            }
        };
        acc = acc + a * basis;
    }
    acc
}
