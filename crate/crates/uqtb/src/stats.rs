//! Statistical descriptions of the flux beyond the first two chaos
//! moments: quasi-random sampling, empirical percentiles, and the analytic
//! cross-checks used to verify the expansion pipeline end to end.
//!
//! Three independent routes to the same quantities live here.
//! [`direct_moments`] integrates the solver itself over the uncertainty
//! interval, with no expansion in between. [`analytic_expectation_plane`]
//! carries the uniform average of the collided plane flux through the
//! kernel integral analytically, collapsing the expectation to a single
//! `u`-integral. [`quantile_oracle`] maps percentiles of the uniform
//! variable straight through any strictly increasing quantity, which is
//! exact where it applies. Disagreement between any of these and the
//! expansion marks a defect; agreement at tight tolerance is the
//! verification backbone of the benchmark tables.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::cmplx::{sinhc, sinhc_deriv};
use crate::error::{Error, Result};
use crate::kernels::{self, SimilarityPoint};
use crate::pce::{ChaosExpansion, UncertainScatteringRatio};
use crate::quad::{integrate, AdaptiveOpts, QuadratureRule};
use crate::real::{lit, Real};

/// Identifier of the percentile estimator convention stored in
/// [`QuantileTable`]: sorted Sobol sample, linear interpolation between
/// order statistics at rank `p * (n - 1)`, zero-based.
pub const ESTIMATOR_ID: &str = "sobol-sorted-linear";

/// First `n` points of the one-dimensional Sobol sequence (the base-2
/// radical inverse), mapped affinely from `(0, 1)` onto `(-1, 1)`.
/// Deterministic and unseeded: the sequence starts `0, -0.5, 0.5, ...`.
pub fn sobol_sequence<T: Real>(n: usize) -> Vec<T> {
    let scale = 2.0f64.powi(-64);
    (1..=n as u64)
        .map(|i| lit::<T>(2.0 * (i.reverse_bits() as f64 * scale) - 1.0))
        .collect()
}

/// Percentile grid of a sampled distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileTable<T> {
    /// Probability levels, strictly increasing inside `(0, 1)`.
    pub percentiles: Vec<T>,
    /// Estimated quantile at each level; non-decreasing.
    pub values: Vec<T>,
    /// Sample count behind the estimate.
    pub n_samples: usize,
    /// Interpolation convention, [`ESTIMATOR_ID`].
    pub estimator: String,
}

impl<T: Real> QuantileTable<T> {
    /// Renders the table in its canonical CSV layout: `p, value,
    /// n_samples`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("p,value,n_samples\n");
        for (&p, &v) in self.percentiles.iter().zip(&self.values) {
            out.push_str(&format!("{p},{v:.16e},{}\n", self.n_samples));
        }
        out
    }
}

pub(crate) fn check_percentile_grid<T: Real>(grid: &[T]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::config("percentile grid is empty"));
    }
    let mut prev = T::zero();
    for &p in grid {
        if !(p > prev && p < T::one()) {
            return Err(Error::config(format!(
                "percentile grid must be strictly increasing inside (0, 1), got {p}"
            )));
        }
        prev = p;
    }
    Ok(())
}

/// Estimates the quantiles of a chaos expansion at each grid probability
/// by evaluating it on `n` Sobol samples and interpolating the sorted
/// results linearly between order statistics.
///
/// Bit-identical across runs: the sample set is deterministic and the
/// reduction is an ordered sort.
pub fn empirical_quantiles<T: Real>(
    exp: &ChaosExpansion<T>,
    n: usize,
    grid: &[T],
) -> Result<QuantileTable<T>> {
    if n < 100 {
        return Err(Error::config(format!(
            "quantile estimation needs at least 100 samples, got {n}"
        )));
    }
    check_percentile_grid(grid)?;
    let mut samples = Vec::with_capacity(n);
    for theta in sobol_sequence::<T>(n) {
        let v = exp.evaluate(theta)?;
        if !v.is_finite() {
            return Err(Error::domain(format!(
                "expansion produced a non-finite sample {v} at theta = {theta}"
            )));
        }
        samples.push(v);
    }
    samples.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite samples compare"));
    let values = grid
        .iter()
        .map(|&p| {
            let h = p * lit::<T>((n - 1) as f64);
            let lo = h.floor();
            let frac = h - lo;
            let lo = lo.to_f64().unwrap() as usize;
            let hi = (lo + 1).min(n - 1);
            samples[lo] + frac * (samples[hi] - samples[lo])
        })
        .collect();
    Ok(QuantileTable {
        percentiles: grid.to_vec(),
        values,
        n_samples: n,
        estimator: ESTIMATOR_ID.to_string(),
    })
}

/// Number of equispaced probe realizations used to verify that a quantity
/// is strictly increasing before the quantile shortcut is trusted.
const MONOTONE_PROBES: usize = 8;

/// Exact quantiles of a strictly increasing quantity of interest.
///
/// For increasing `f`, the p-th quantile of `f(c)` is `f` at the p-th
/// quantile of `c`, which for the uniform model is `cbar + omega1 (2p - 1)`.
/// Monotonicity is checked on [`MONOTONE_PROBES`] equispaced realizations
/// first; a violation is reported rather than silently returning a wrong
/// percentile. `qoi` receives all realizations in one batch.
pub fn quantile_oracle_grid<T, F>(
    unc: &UncertainScatteringRatio<T>,
    grid: &[T],
    qoi: F,
) -> Result<Vec<T>>
where
    T: Real,
    F: Fn(&[T]) -> Result<Vec<T>>,
{
    unc.validate()?;
    check_percentile_grid(grid)?;
    if unc.omega1() == T::zero() {
        // degenerate distribution: every quantile is the nominal value
        let v = qoi(&[unc.cbar()])?[0];
        return Ok(vec![v; grid.len()]);
    }
    let two = lit::<T>(2.0);
    let mut cs: Vec<T> = (0..MONOTONE_PROBES)
        .map(|i| {
            let theta = lit::<T>(2.0 * i as f64 / (MONOTONE_PROBES - 1) as f64 - 1.0);
            unc.realize(theta)
        })
        .collect();
    cs.extend(grid.iter().map(|&p| unc.realize(two * p - T::one())));
    let values = qoi(&cs)?;
    // strict increase demanded; NaN comparisons fail it, as they should
    let not_increasing =
        |w: &[T]| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater);
    if let Some(at) = values[..MONOTONE_PROBES].windows(2).position(not_increasing) {
        return Err(Error::NotMonotonic {
            c_lo: cs[at].to_f64().unwrap_or(f64::NAN),
            f_lo: values[at].to_f64().unwrap_or(f64::NAN),
            c_hi: cs[at + 1].to_f64().unwrap_or(f64::NAN),
            f_hi: values[at + 1].to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(values[MONOTONE_PROBES..].to_vec())
}

/// Single-percentile form of [`quantile_oracle_grid`].
pub fn quantile_oracle<T, F>(unc: &UncertainScatteringRatio<T>, p: T, qoi: F) -> Result<T>
where
    T: Real,
    F: Fn(&[T]) -> Result<Vec<T>>,
{
    Ok(quantile_oracle_grid(unc, &[p], qoi)?[0])
}

/// Expectation of the collided plane-pulse flux over the uncertain ratio,
/// collapsed to a single kernel integral.
///
/// The uniform average of `c e^{c z}` over the support is
/// `e^{cbar z} (cbar sinhc(omega1 z) + omega1 sinhc'(omega1 z))`, carried
/// out under the `u`-integral, so the expectation costs one quadrature
/// rather than one per realization. Zero half-width reduces to the nominal
/// collided flux.
pub fn analytic_expectation_plane<T: Real>(
    pt: &SimilarityPoint<T>,
    unc: &UncertainScatteringRatio<T>,
) -> Result<T> {
    analytic_expectation_plane_with(pt, unc, &AdaptiveOpts::default())
}

/// [`analytic_expectation_plane`] with explicit quadrature controls.
pub fn analytic_expectation_plane_with<T: Real>(
    pt: &SimilarityPoint<T>,
    unc: &UncertainScatteringRatio<T>,
    opts: &AdaptiveOpts<T>,
) -> Result<T> {
    unc.validate()?;
    let one = T::one();
    let eta = pt.eta();
    let t = pt.time();
    if eta >= one - lit(kernels::FRONT_MARGIN) {
        return Ok(T::zero());
    }
    let half = lit::<T>(0.5);
    let cbar = unc.cbar();
    let omega1 = unc.omega1();
    let lq = ((one + eta) / (one - eta)).ln();
    let front = one - eta * eta;
    let b0 = t * half * front;
    let f = |u: T| -> Result<T> {
        let (s, m) = (u * half).sin_cos();
        let a = Complex::new(lq, u);
        let d = Complex::new(eta * m, s);
        let r = a / d;
        let z = r * (m * b0);
        let w = z * omega1;
        let avg = sinhc(w) * cbar + sinhc_deriv(w) * omega1;
        Ok((r * r * (z * cbar).exp() * avg).re)
    };
    let integral = integrate(f, T::zero(), T::PI(), opts, "collided flux expectation")?;
    let eighth = lit::<T>(0.125);
    Ok((-t).exp() * front * eighth / T::PI() * integral)
}

/// Expectation and variance of a quantity of interest by quadrature over
/// the uncertainty interval, with no expansion in between.
///
/// `qoi` receives batches of realized ratios; each adaptive panel costs
/// one batched call covering its coarse and refined node sets. The
/// variance is the integral of the square minus the squared mean, clamped
/// at zero against cancellation when the spread is at roundoff level.
pub fn direct_moments<T, F>(
    unc: &UncertainScatteringRatio<T>,
    qoi: F,
    opts: &AdaptiveOpts<T>,
) -> Result<(T, T)>
where
    T: Real,
    F: Fn(&[T]) -> Result<Vec<T>>,
{
    unc.validate()?;
    let half = lit::<T>(0.5);
    let (mean_int, square_int) = adaptive_theta_pair(unc, &qoi, opts)?;
    let mean = half * mean_int;
    let var = half * square_int - mean * mean;
    Ok((mean, if var > T::zero() { var } else { T::zero() }))
}

/// Integrates `qoi` and its square over `theta` in `[-1, 1]` with shared
/// panels, batching every node of a panel (both rule orders) into a single
/// `qoi` call.
fn adaptive_theta_pair<T, F>(
    unc: &UncertainScatteringRatio<T>,
    qoi: &F,
    opts: &AdaptiveOpts<T>,
) -> Result<(T, T)>
where
    T: Real,
    F: Fn(&[T]) -> Result<Vec<T>>,
{
    struct Panel<T> {
        a: T,
        b: T,
        value: [T; 2],
        err: [T; 2],
    }

    let coarse = QuadratureRule::<T>::gauss_legendre(opts.order);
    let fine = QuadratureRule::<T>::gauss_legendre(2 * opts.order);
    let eval = |a: T, b: T| -> Result<Panel<T>> {
        let mid = (a + b) * lit::<T>(0.5);
        let halfw = (b - a) * lit::<T>(0.5);
        let mut cs: Vec<T> = Vec::with_capacity(coarse.order() + fine.order());
        for &x in coarse.nodes().iter().chain(fine.nodes()) {
            cs.push(unc.realize(mid + halfw * x));
        }
        let vals = qoi(&cs)?;
        if vals.len() != cs.len() {
            return Err(Error::config(format!(
                "quantity of interest returned {} values for {} nodes",
                vals.len(),
                cs.len()
            )));
        }
        let mut acc = [[T::zero(); 2]; 2]; // [rule][moment]
        for (rule, (rule_obj, offset)) in
            [(&coarse, 0), (&fine, coarse.order())].iter().enumerate()
        {
            for (i, &w) in rule_obj.weights().iter().enumerate() {
                let v = vals[offset + i];
                acc[rule][0] = acc[rule][0] + w * v;
                acc[rule][1] = acc[rule][1] + w * v * v;
            }
        }
        let value = [acc[1][0] * halfw, acc[1][1] * halfw];
        let err = [
            ((acc[1][0] - acc[0][0]) * halfw).abs(),
            ((acc[1][1] - acc[0][1]) * halfw).abs(),
        ];
        Ok(Panel { a, b, value, err })
    };

    let mut panels = vec![eval(-T::one(), T::one())?];
    loop {
        let mut total = [T::zero(); 2];
        let mut err = [T::zero(); 2];
        for p in &panels {
            for k in 0..2 {
                total[k] = total[k] + p.value[k];
                err[k] = err[k] + p.err[k];
            }
        }
        // The square integral is non-negative and bounds the mean through
        // |I_mean| <= sqrt(2 I_square), which keeps the mean's tolerance
        // meaningful when the mean itself sits at zero.
        let scale = [
            total[0].abs().max((total[1] + total[1]).sqrt()),
            total[1],
        ];
        let converged = (0..2).all(|k| err[k] <= opts.rel_tol * scale[k] + opts.abs_floor);
        if converged {
            return Ok((total[0], total[1]));
        }
        if panels.len() >= opts.max_panels {
            let worst = err[0].max(err[1]);
            return Err(Error::NonConvergence {
                context: "moment quadrature over the uncertainty interval",
                achieved: worst.to_f64().unwrap_or(f64::NAN),
                required: (opts.rel_tol * scale[0] + opts.abs_floor)
                    .to_f64()
                    .unwrap_or(f64::NAN),
                panels: panels.len(),
            });
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|(_, p), (_, q)| {
                let pe = p.err[0].max(p.err[1]);
                let qe = q.err[0].max(q.err[1]);
                pe.partial_cmp(&qe).expect("finite error estimates")
            })
            .expect("worklist is non-empty");
        let Panel { a, b, .. } = panels.swap_remove(idx);
        let mid = (a + b) * lit::<T>(0.5);
        panels.push(eval(a, mid)?);
        panels.push(eval(mid, b)?);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{plane_collided_many, plane_collided_with, plane_uncollided};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn unc(cbar: f64, omega1: f64) -> UncertainScatteringRatio<f64> {
        UncertainScatteringRatio::new(cbar, omega1).unwrap()
    }

    #[test]
    fn sobol_sequence_starts_with_the_radical_inverses() {
        let s = sobol_sequence::<f64>(3);
        assert_eq!(s, vec![0.0, -0.5, 0.5]);
        assert_eq!(sobol_sequence::<f64>(3), s);
        assert!(sobol_sequence::<f64>(4096)
            .iter()
            .all(|&v| v > -1.0 && v < 1.0));
    }

    #[test]
    fn sobol_sample_mean_equidistributes() {
        let n = 1 << 20;
        let mean: f64 = sobol_sequence::<f64>(n).iter().sum::<f64>() / n as f64;
        assert!(mean.abs() < 1e-5, "mean {mean}");
    }

    fn constant_expansion(value: f64) -> ChaosExpansion<f64> {
        ChaosExpansion::project(unc(1.0, 0.25), 3, 0.0, |cs| {
            Ok(cs.iter().map(|_| value).collect())
        })
        .unwrap()
    }

    fn identity_expansion() -> ChaosExpansion<f64> {
        // a_1 = 1, everything else 0: the QoI is theta itself
        ChaosExpansion::project(unc(1.0, 0.25), 3, 0.0, |cs| {
            Ok(cs.iter().map(|&c| (c - 1.0) / 0.25).collect())
        })
        .unwrap()
    }

    #[test]
    fn quantiles_of_a_constant_are_the_constant() {
        let table = empirical_quantiles(&constant_expansion(4.25), 1000, &[0.1, 0.5, 0.9]).unwrap();
        for &v in &table.values {
            assert_abs_diff_eq!(v, 4.25, epsilon = 1e-14);
        }
        assert_eq!(table.n_samples, 1000);
        assert_eq!(table.estimator, ESTIMATOR_ID);
    }

    #[test]
    fn median_of_uniform_theta_is_near_zero() {
        let n = 10_000;
        let table = empirical_quantiles(&identity_expansion(), n, &[0.5]).unwrap();
        assert!(table.values[0].abs() < 2.0 / n as f64, "{}", table.values[0]);
    }

    #[test]
    fn empirical_quantiles_are_deterministic_and_sorted() {
        let grid: Vec<f64> = (1..100).map(|k| k as f64 / 100.0).collect();
        let exp = identity_expansion();
        let a = empirical_quantiles(&exp, 5000, &grid).unwrap();
        let b = empirical_quantiles(&exp, 5000, &grid).unwrap();
        assert_eq!(a, b);
        assert!(a.values.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn quantile_estimates_sharpen_with_sample_size() {
        // quartiles of theta itself are known exactly
        let exp = identity_expansion();
        let grid = [0.25, 0.75];
        let exact = [-0.5, 0.5];
        let mut prev = f64::INFINITY;
        for n in [100, 10_000] {
            let got = empirical_quantiles(&exp, n, &grid).unwrap();
            let rmse = got
                .values
                .iter()
                .zip(exact)
                .map(|(&v, e)| (v - e) * (v - e))
                .sum::<f64>()
                .sqrt();
            assert!(rmse < prev);
            prev = rmse;
        }
        assert!(prev < 1e-3, "rmse {prev}");
    }

    #[test]
    fn bad_quantile_requests_are_rejected() {
        let exp = constant_expansion(1.0);
        assert!(empirical_quantiles(&exp, 10, &[0.5]).is_err());
        assert!(empirical_quantiles(&exp, 1000, &[]).is_err());
        assert!(empirical_quantiles(&exp, 1000, &[0.5, 0.5]).is_err());
        assert!(empirical_quantiles(&exp, 1000, &[0.0, 0.5]).is_err());
        assert!(empirical_quantiles(&exp, 1000, &[0.5, 1.0]).is_err());
    }

    #[test]
    fn quantile_table_csv_layout() {
        let table = QuantileTable {
            percentiles: vec![0.25, 0.5],
            values: vec![1.0, 2.0],
            n_samples: 100,
            estimator: ESTIMATOR_ID.to_string(),
        };
        let csv = table.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("p,value,n_samples"));
        assert_eq!(lines.next(), Some("0.25,1.0000000000000000e0,100"));
    }

    #[test]
    fn oracle_passes_percentiles_through_a_monotone_map() {
        let u = unc(1.0, 0.5);
        // strictly increasing analytic QoI with known quantiles
        let qoi = |cs: &[f64]| Ok(cs.iter().map(|&c| c * c + 1.0).collect());
        let at = |p: f64| {
            let c = 1.0 + 0.5 * (2.0 * p - 1.0);
            c * c + 1.0
        };
        assert_abs_diff_eq!(
            quantile_oracle(&u, 0.5, qoi).unwrap(),
            at(0.5),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            quantile_oracle(&u, 0.25, qoi).unwrap(),
            at(0.25),
            epsilon = 1e-14
        );
        let grid = [0.01, 0.5, 0.99];
        let got = quantile_oracle_grid(&u, &grid, qoi).unwrap();
        for (&p, &v) in grid.iter().zip(&got) {
            assert_abs_diff_eq!(v, at(p), epsilon = 1e-14);
        }
    }

    #[test]
    fn oracle_rejects_non_monotone_quantities() {
        let u = unc(1.0, 0.5);
        let err = quantile_oracle(&u, 0.5, |cs: &[f64]| {
            Ok(cs.iter().map(|&c| (c - 1.0) * (c - 1.0)).collect())
        })
        .unwrap_err();
        assert!(matches!(err, Error::NotMonotonic { .. }), "{err}");
    }

    #[test]
    fn oracle_handles_a_degenerate_distribution() {
        let u = unc(0.8, 0.0);
        let qoi = |cs: &[f64]| Ok(cs.to_vec());
        assert_eq!(quantile_oracle(&u, 0.25, qoi).unwrap(), 0.8);
        assert_eq!(quantile_oracle(&u, 0.75, qoi).unwrap(), 0.8);
    }

    // 30-digit reference values for the averaged collided flux, from the
    // closed-form integrand evaluated independently.
    #[test]
    fn averaged_collided_flux_reference_values() {
        for (x, t, cbar, omega1, want) in [
            (0.0, 5.0, 1.0, 0.5, 0.63622609098000951343),
            (0.5, 1.0, 1.0, 0.5, 0.3704543226046971203),
            (1.2, 5.0, 1.1, 0.275, 0.42617427429783109589),
        ] {
            let pt = SimilarityPoint::new(x, t).unwrap();
            let got = analytic_expectation_plane(&pt, &unc(cbar, omega1)).unwrap();
            assert_relative_eq!(got, want, max_relative = 1e-11);
        }
    }

    #[test]
    fn averaged_flux_matches_quadrature_over_realizations() {
        let (x, t) = (0.5, 1.0);
        let u = unc(1.0, 0.5);
        let pt = SimilarityPoint::new(x, t).unwrap();
        let closed = analytic_expectation_plane(&pt, &u).unwrap();
        let opts = AdaptiveOpts::default();
        let (mean, _) =
            direct_moments(&u, |cs| plane_collided_many(x, t, cs, &opts), &opts).unwrap();
        assert_relative_eq!(closed, mean, max_relative = 1e-10);
    }

    #[test]
    fn averaged_flux_narrow_width_limit_is_the_nominal_flux() {
        let pt = SimilarityPoint::new(0.5, 1.0).unwrap();
        let got = analytic_expectation_plane(&pt, &unc(1.0, 1e-6)).unwrap();
        let nominal = plane_collided_with(0.5, 1.0, 1.0, &AdaptiveOpts::default()).unwrap();
        assert_relative_eq!(got, nominal, max_relative = 1e-5);
    }

    #[test]
    fn averaged_flux_vanishes_outside_the_wavefront() {
        let pt = SimilarityPoint::new(3.0, 1.0).unwrap();
        assert_eq!(
            analytic_expectation_plane(&pt, &unc(1.0, 0.5)).unwrap(),
            0.0
        );
    }

    #[test]
    fn direct_moments_of_simple_quantities() {
        let opts = AdaptiveOpts::default();
        let u = unc(1.0, 0.5);
        let (mean, var) =
            direct_moments(&u, |cs| Ok(cs.iter().map(|_| 4.0).collect()), &opts).unwrap();
        assert_abs_diff_eq!(mean, 4.0, epsilon = 1e-13);
        assert_abs_diff_eq!(var, 0.0, epsilon = 1e-15);
        // QoI = theta: moments of the uniform density itself
        let (mean, var) = direct_moments(
            &u,
            |cs| Ok(cs.iter().map(|&c| (c - 1.0) / 0.5).collect()),
            &opts,
        )
        .unwrap();
        assert_abs_diff_eq!(mean, 0.0, epsilon = 1e-13);
        assert_relative_eq!(var, 1.0 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn direct_moments_cross_check_the_expansion() {
        let (x, t) = (0.5, 1.0);
        let u = unc(1.0, 0.1);
        let opts = AdaptiveOpts::default();
        let exp = ChaosExpansion::project(u, 6, plane_uncollided(x, t).unwrap(), |cs| {
            plane_collided_many(x, t, cs, &opts)
        })
        .unwrap();
        let (mean, var) = direct_moments(
            &u,
            |cs| plane_collided_many(x, t, cs, &opts),
            &opts,
        )
        .unwrap();
        assert_abs_diff_eq!(
            exp.expectation(),
            plane_uncollided(x, t).unwrap() + mean,
            epsilon = 1e-8
        );
        assert_abs_diff_eq!(exp.variance(), var, epsilon = 1e-8);
    }
}
