//! Polynomial chaos expansion of a quantity of interest over an uncertain
//! scattering ratio.
//!
//! The ratio is modeled as `c = cbar + omega1 * theta` with `theta` uniform
//! on `[-1, 1]`, so the natural basis is the Legendre family and the
//! expansion coefficients are
//!
//! ```text
//! a_j = (2j + 1)/2 * INT_{-1}^{1} f(cbar + omega1 theta) P_j(theta) d theta,
//! ```
//!
//! computed non-intrusively by Gauss-Legendre quadrature on samples of the
//! deterministic solver. The first two moments follow from orthogonality:
//! the mean is `a_0` and the variance `sum_{j>=1} a_j^2 / (2j + 1)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::legendre;
use crate::quad::QuadratureRule;
use crate::real::{count, lit, Real};

/// Coefficients from the half-order and full-order rules must agree to
/// this tolerance, relative to the leading coefficient, or the projection
/// is reported as unresolved by the chosen degree.
const ALIAS_TOL: f64 = 1e-9;

/// Uniformly distributed scattering ratio `c = cbar + omega1 * theta`,
/// `theta ~ U[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UncertainScatteringRatio<T> {
    cbar: T,
    omega1: T,
}

impl<T: Real> UncertainScatteringRatio<T> {
    /// A ratio centered at `cbar` with half-width `omega1`. The whole
    /// support `[cbar - omega1, cbar + omega1]` must stay non-negative.
    pub fn new(cbar: T, omega1: T) -> Result<Self> {
        let r = UncertainScatteringRatio { cbar, omega1 };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.cbar.is_finite() || !self.omega1.is_finite() {
            return Err(Error::config(format!(
                "uncertain ratio parameters must be finite, got cbar = {}, omega1 = {}",
                self.cbar, self.omega1
            )));
        }
        if self.omega1 < T::zero() {
            return Err(Error::config(format!(
                "uncertainty half-width must be non-negative, got {}",
                self.omega1
            )));
        }
        if self.cbar - self.omega1 < T::zero() {
            return Err(Error::config(format!(
                "scattering ratio support [{}, {}] extends below zero",
                self.cbar - self.omega1,
                self.cbar + self.omega1
            )));
        }
        Ok(())
    }

    pub fn cbar(&self) -> T {
        self.cbar
    }

    pub fn omega1(&self) -> T {
        self.omega1
    }

    /// The ratio at a given value of the underlying uniform variable.
    pub fn realize(&self, theta: T) -> T {
        self.cbar + self.omega1 * theta
    }
}

/// Truncated Legendre expansion of a scalar quantity of interest, plus a
/// deterministic offset for any part of the quantity that does not depend
/// on the ratio (the uncollided flux, typically).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChaosExpansion<T> {
    ratio: UncertainScatteringRatio<T>,
    offset: T,
    coeffs: Vec<T>,
}

impl<T: Real> ChaosExpansion<T> {
    /// Projects `qoi` onto Legendre polynomials up to `degree`.
    ///
    /// `qoi` receives a batch of realized ratios (the quadrature nodes
    /// mapped through [`UncertainScatteringRatio::realize`]) and must
    /// return the quantity at each. The projection runs at order
    /// `max(2 (degree + 1), 16)` and again at twice that; disagreement
    /// between the two coefficient sets means the quadrature cannot
    /// resolve the integrand and surfaces as a non-convergence error.
    pub fn project<F>(
        ratio: UncertainScatteringRatio<T>,
        degree: usize,
        offset: T,
        qoi: F,
    ) -> Result<Self>
    where
        F: Fn(&[T]) -> Result<Vec<T>>,
    {
        ratio.validate()?;
        if !offset.is_finite() {
            return Err(Error::config(format!("offset must be finite, got {offset}")));
        }
        let n_coeff = degree + 1;
        let base_order = (2 * n_coeff).max(16);
        let coarse = project_at_order(&ratio, n_coeff, base_order, &qoi)?;
        let coeffs = project_at_order(&ratio, n_coeff, 2 * base_order, &qoi)?;
        let scale = T::one() + coeffs[0].abs();
        let tol = lit::<T>(ALIAS_TOL);
        let mut worst = T::zero();
        for (&a, &b) in coarse.iter().zip(&coeffs) {
            let d = (a - b).abs() / scale;
            if d > worst {
                worst = d;
            }
        }
        if worst > tol {
            return Err(Error::NonConvergence {
                context: "chaos projection (doubled-order check)",
                achieved: worst.to_f64().unwrap_or(f64::NAN),
                required: ALIAS_TOL,
                panels: 2 * base_order,
            });
        }
        Ok(ChaosExpansion {
            ratio,
            offset,
            coeffs,
        })
    }

    pub fn ratio(&self) -> &UncertainScatteringRatio<T> {
        &self.ratio
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn offset(&self) -> T {
        self.offset
    }

    /// Expansion coefficients `a_0 ..= a_N` (the offset not included).
    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    /// The expansion evaluated at a value of the underlying uniform
    /// variable, offset included.
    pub fn evaluate(&self, theta: T) -> Result<T> {
        if !(theta >= -T::one() && theta <= T::one()) {
            return Err(Error::domain(format!(
                "the underlying variable lives on [-1, 1], got {theta}"
            )));
        }
        Ok(self.offset + legendre::eval_series(&self.coeffs, theta))
    }

    /// Mean of the quantity: `offset + a_0` by orthogonality.
    pub fn expectation(&self) -> T {
        self.offset + self.coeffs[0]
    }

    /// Variance of the quantity: `sum_{j>=1} a_j^2 / (2j + 1)`. The offset
    /// and `a_0` shift the distribution without spreading it.
    pub fn variance(&self) -> T {
        self.variance_through(self.degree())
    }

    /// Variance of the expansion truncated after `P_degree`, for studying
    /// how the spread converges order by order.
    pub fn variance_through(&self, degree: usize) -> T {
        let mut acc = T::zero();
        for (j, &a) in self.coeffs.iter().enumerate().skip(1).take(degree) {
            let weight = count::<T>(2 * j + 1);
            acc = acc + a * a / weight;
        }
        acc
    }

    pub fn std_dev(&self) -> T {
        self.variance().sqrt()
    }
}

fn project_at_order<T, F>(
    ratio: &UncertainScatteringRatio<T>,
    n_coeff: usize,
    order: usize,
    qoi: &F,
) -> Result<Vec<T>>
where
    T: Real,
    F: Fn(&[T]) -> Result<Vec<T>>,
{
    let rule = QuadratureRule::<T>::gauss_legendre(order);
    let thetas = rule.nodes();
    let cs: Vec<T> = thetas.iter().map(|&th| ratio.realize(th)).collect();
    let values = qoi(&cs)?;
    if values.len() != cs.len() {
        return Err(Error::config(format!(
            "quantity of interest returned {} values for {} nodes",
            values.len(),
            cs.len()
        )));
    }
    let mut acc = vec![T::zero(); n_coeff];
    let mut basis = vec![T::zero(); n_coeff];
    for ((&theta, &w), &value) in thetas.iter().zip(rule.weights()).zip(&values) {
        legendre::eval_all(theta, &mut basis);
        for (a, &p) in acc.iter_mut().zip(&basis) {
            *a = *a + w * value * p;
        }
    }
    let half = lit::<T>(0.5);
    Ok(acc
        .iter()
        .enumerate()
        .map(|(j, &s)| s * half * count::<T>(2 * j + 1))
        .collect())
}
