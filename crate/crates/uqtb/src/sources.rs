//! Finite spatial sources assembled from the pulse kernels.
//!
//! A slab source with spatial density `f(x)` emitting at unit rate from
//! `t = 0` until shutoff produces
//!
//! ```text
//! phi(x, t) = INT d_lag INT dy  f(x - y) G(y, lag),
//! ```
//!
//! where `G` is the plane-pulse flux at age `lag` and the lag runs from
//! `max(0, t - duration)` to `t`. The uncollided part collapses to a single
//! integral of `e^{-lag}/(2 lag)` times the source mass inside the reach
//! `[x - lag, x + lag]`. The collided part keeps the double integral; the
//! inner displacement window is clipped to the moving front `|y| = lag` and
//! nodes are clustered wherever the window touches it, since the kernel
//! vanishes there with a singular derivative.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{self, FluxValue, SimilarityPoint};
use crate::quad::{integrate_pieces, nested_opts, seeded_pieces, AdaptiveOpts, Piece};
use crate::real::{lit, Real};

/// Half-width of the effective Gaussian support in units of sigma.
/// `exp(-8.5^2) ~ 3e-32` sits far below every tolerance in use.
const GAUSS_REACH_SIGMAS: f64 = 8.5;

// Panel orders for the nested levels of the collided convolution: time
// lag (outer), displacement (middle), kernel transform variable (inner).
// Panels smaller than the kernel default keep bisection granular enough
// that refinement concentrates near the front instead of re-integrating
// smooth regions at high order.
const LAG_ORDER: usize = 16;
const SHIFT_ORDER: usize = 24;
const KERNEL_ORDER: usize = 32;

/// Emission geometry of a benchmark problem.
///
/// The pulses release a unit of particles instantaneously at `t = 0`; the
/// extended sources emit at unit rate per unit volume from `t = 0` until
/// `duration`. The coordinate passed to the flux functions is the slab
/// position `x` for the plane-symmetric sources and the cylindrical
/// radius for [`SourceConfig::Line`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SourceConfig<T> {
    /// Plane pulse `delta(x) delta(t)`, the slab Green's function.
    Plane,
    /// Uniform slab on `|x| < half_width`, active for `t < duration`.
    Square { half_width: T, duration: T },
    /// Profile `exp(-x^2 / sigma^2)`, active for `t < duration`.
    Gaussian { sigma: T, duration: T },
    /// Line pulse `delta(r) delta(t)` in cylindrical symmetry.
    Line,
}

impl<T: Real> SourceConfig<T> {
    /// Square source with the benchmark parameters `half_width = 0.5`,
    /// `duration = 5`.
    pub fn square_default() -> Self {
        SourceConfig::Square {
            half_width: lit(0.5),
            duration: lit(5.0),
        }
    }

    /// Gaussian source with the benchmark parameters `sigma = 0.5`,
    /// `duration = 5`.
    pub fn gaussian_default() -> Self {
        SourceConfig::Gaussian {
            sigma: lit(0.5),
            duration: lit(5.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |name: &str, v: T| {
            if v.is_finite() && v > T::zero() {
                Ok(())
            } else {
                Err(Error::config(format!(
                    "source {name} must be positive and finite, got {v}"
                )))
            }
        };
        match *self {
            SourceConfig::Plane | SourceConfig::Line => Ok(()),
            SourceConfig::Square {
                half_width,
                duration,
            } => {
                check("half_width", half_width)?;
                check("duration", duration)
            }
            SourceConfig::Gaussian { sigma, duration } => {
                check("sigma", sigma)?;
                check("duration", duration)
            }
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SourceConfig::Plane => "plane",
            SourceConfig::Square { .. } => "square",
            SourceConfig::Gaussian { .. } => "gaussian",
            SourceConfig::Line => "line",
        }
    }

    /// True when the spatial coordinate is a radius, so profiles start at
    /// zero instead of mirroring through the origin.
    pub fn is_radial(&self) -> bool {
        matches!(self, SourceConfig::Line)
    }

    /// Distance beyond which the flux at time `t` is identically zero
    /// (for the Gaussian: zero to working precision).
    pub fn support_radius(&self, t: T) -> T {
        match *self {
            SourceConfig::Plane | SourceConfig::Line => t,
            SourceConfig::Square { half_width, .. } => half_width + t,
            SourceConfig::Gaussian { sigma, .. } => sigma * lit::<T>(GAUSS_REACH_SIGMAS) + t,
        }
    }
}

/// Quadrature controls sized for the source convolutions: two decades
/// looser than the kernel default, because every extra digit multiplies
/// the cost of the nested integral.
pub fn default_source_opts<T: Real>() -> AdaptiveOpts<T> {
    AdaptiveOpts::default().with_rel_tol(lit(1e-8))
}

/// Uncollided flux of `src` at position `x` (radius for the line pulse)
/// and time `t`.
pub fn source_uncollided<T: Real>(src: &SourceConfig<T>, x: T, t: T) -> Result<T> {
    src.validate()?;
    match *src {
        SourceConfig::Plane => kernels::plane_uncollided(x, t),
        SourceConfig::Line => kernels::line_uncollided(x, t),
        SourceConfig::Square {
            half_width,
            duration,
        } => slab_uncollided(x, t, duration, half_width, &[half_width + half_width], |x, d| {
            square_reach_mass(x, d, half_width)
        }),
        SourceConfig::Gaussian { sigma, duration } => {
            let reach = sigma * lit::<T>(GAUSS_REACH_SIGMAS);
            slab_uncollided(x, t, duration, reach, &[], |x, d| {
                gauss_reach_mass(x, d, sigma)
            })
        }
    }
}

/// Collided flux of `src` at the default convolution tolerance.
pub fn source_collided<T: Real>(src: &SourceConfig<T>, x: T, t: T, c: T) -> Result<T> {
    source_collided_with(src, x, t, c, &default_source_opts())
}

/// [`source_collided`] with explicit quadrature controls.
pub fn source_collided_with<T: Real>(
    src: &SourceConfig<T>,
    x: T,
    t: T,
    c: T,
    opts: &AdaptiveOpts<T>,
) -> Result<T> {
    Ok(source_collided_many(src, x, t, &[c], opts)?[0])
}

/// Collided flux for a whole batch of scattering ratios. All entries share
/// one panel decomposition at every level of the nested quadrature.
pub fn source_collided_many<T: Real>(
    src: &SourceConfig<T>,
    x: T,
    t: T,
    cs: &[T],
    opts: &AdaptiveOpts<T>,
) -> Result<Vec<T>> {
    src.validate()?;
    match *src {
        SourceConfig::Plane => kernels::plane_collided_many(x, t, cs, opts),
        SourceConfig::Line => kernels::line_collided_many(x, t, cs, opts),
        SourceConfig::Square {
            half_width,
            duration,
        } => slab_collided_many(x, t, duration, half_width, cs, opts, |_| T::one()),
        SourceConfig::Gaussian { sigma, duration } => {
            let reach = sigma * lit::<T>(GAUSS_REACH_SIGMAS);
            slab_collided_many(x, t, duration, reach, cs, opts, |xp| {
                (-(xp / sigma) * (xp / sigma)).exp()
            })
        }
    }
}

/// Uncollided plus collided flux of `src`.
pub fn source_flux<T: Real>(src: &SourceConfig<T>, x: T, t: T, c: T) -> Result<FluxValue<T>> {
    source_flux_with(src, x, t, c, &default_source_opts())
}

pub fn source_flux_with<T: Real>(
    src: &SourceConfig<T>,
    x: T,
    t: T,
    c: T,
    opts: &AdaptiveOpts<T>,
) -> Result<FluxValue<T>> {
    Ok(FluxValue {
        uncollided: source_uncollided(src, x, t)?,
        collided: source_collided_with(src, x, t, c, opts)?,
    })
}

/// Source mass inside `[x - d, x + d]` for the uniform slab.
fn square_reach_mass<T: Real>(x: T, d: T, half_width: T) -> T {
    let lo = if x - d > -half_width { x - d } else { -half_width };
    let hi = if x + d < half_width { x + d } else { half_width };
    if hi > lo {
        hi - lo
    } else {
        T::zero()
    }
}

/// Source mass inside `[x - d, x + d]` for the Gaussian profile. The
/// complementary form keeps relative precision out on the tail, where the
/// plain `erf` difference would cancel to roundoff.
fn gauss_reach_mass<T: Real>(x: T, d: T, sigma: T) -> T {
    let erfc = |v: T| lit::<T>(libm::erfc(v.to_f64().unwrap()));
    let half = lit::<T>(0.5);
    sigma * T::PI().sqrt() * half * (erfc((x - d) / sigma) - erfc((x + d) / sigma))
}

/// Reduced uncollided integral: `INT e^{-lag}/(2 lag) * mass(x, lag) d lag`
/// over the active ages, where `mass` is the source material inside the
/// reach of a straight flight. `breaks` lists lags where `mass` has kinks
/// in addition to the geometric ones at `|x| -+ reach`.
fn slab_uncollided<T: Real>(
    x: T,
    t: T,
    duration: T,
    reach: T,
    extra_breaks: &[T],
    mass: impl Fn(T, T) -> T,
) -> Result<T> {
    SimilarityPoint::new(x, t)?;
    let x = x.abs();
    if x >= reach + t {
        return Ok(T::zero());
    }
    let zero = T::zero();
    let dlo = if t > duration { t - duration } else { zero };
    let mut breaks = vec![(x - reach).abs(), x + reach];
    breaks.extend_from_slice(extra_breaks);
    let pieces = seeded_pieces(dlo, t, &breaks);
    let half = lit::<T>(0.5);
    let f = |d: T, out: &mut [T]| {
        out[0] = (-d).exp() * half / d * mass(x, d);
        Ok(())
    };
    let opts = AdaptiveOpts::default().with_rel_tol(lit(1e-12)).with_order(32);
    Ok(integrate_pieces(&f, &pieces, 1, &opts, "uncollided source flux")?[0])
}

/// Panel layout for the displacement window `[lo, hi]`, clustering toward
/// any end that sits on the front `|y| = lag` and seeding a boundary at
/// `y = 0` where the kernel's derivative in `|y|` reverses sign.
fn window_pieces<T: Real>(lo: T, hi: T, lo_front: bool, hi_front: bool) -> Vec<Piece<T>> {
    let quarter = (hi - lo) * lit::<T>(0.25);
    let mut pieces = Vec::with_capacity(4);
    let mut a = lo;
    if lo_front {
        pieces.push(Piece::ClusterLower { a, b: a + quarter });
        a = a + quarter;
    }
    let plain_end = if hi_front { hi - quarter } else { hi };
    if a < T::zero() && T::zero() < plain_end {
        pieces.push(Piece::Plain { a, b: T::zero() });
        a = T::zero();
    }
    pieces.push(Piece::Plain { a, b: plain_end });
    if hi_front {
        pieces.push(Piece::ClusterUpper { a: plain_end, b: hi });
    }
    pieces
}

/// Nested convolution for the collided flux of a slab source with profile
/// `f` supported (to working precision) on `|x| < reach`.
fn slab_collided_many<T: Real>(
    x: T,
    t: T,
    duration: T,
    reach: T,
    cs: &[T],
    opts: &AdaptiveOpts<T>,
    profile: impl Fn(T) -> T,
) -> Result<Vec<T>> {
    SimilarityPoint::new(x, t)?;
    kernels::check_ratios(cs)?;
    let x = x.abs();
    let zero = T::zero();
    if x >= reach + t {
        return Ok(vec![zero; cs.len()]);
    }
    let dlo = if t > duration { t - duration } else { zero };

    // Near the support edge the lag and displacement integrals vanish, so a
    // pure relative test is unattainable there; cap the demanded accuracy
    // at an absolute floor far below the kernel's peak magnitude instead.
    let growth = cs
        .iter()
        .fold(zero, |g, &c| g.max(c - T::one()))
        .max(zero);
    let peak = (t * growth).exp();
    let lag_floor = opts.rel_tol * peak * lit(1e-3);
    let shift_floor = lag_floor * lit::<T>(1e-2) / t.max(T::one());

    let mut lag_opts = opts.with_order(LAG_ORDER);
    lag_opts.abs_floor = lag_opts.abs_floor.max(lag_floor);
    let mut shift_opts = nested_opts(&lag_opts).with_order(SHIFT_ORDER);
    shift_opts.abs_floor = shift_opts.abs_floor.max(shift_floor);
    let u_opts = nested_opts(&shift_opts).with_order(KERNEL_ORDER);

    let outer = |lag: T, out: &mut [T]| -> Result<()> {
        let lo_raw = x - reach;
        let hi_raw = x + reach;
        let lo_front = lo_raw <= -lag;
        let hi_front = hi_raw >= lag;
        let lo = if lo_front { -lag } else { lo_raw };
        let hi = if hi_front { lag } else { hi_raw };
        if lo >= hi {
            out.fill(zero);
            return Ok(());
        }
        let inner = |y: T, vals: &mut [T]| -> Result<()> {
            let kernel = kernels::plane_collided_many(y, lag, cs, &u_opts)?;
            let w = profile(x - y);
            for (v, k) in vals.iter_mut().zip(kernel) {
                *v = k * w;
            }
            Ok(())
        };
        let pieces = window_pieces(lo, hi, lo_front, hi_front);
        let part = integrate_pieces(&inner, &pieces, cs.len(), &shift_opts, "source displacement integral")?;
        out.copy_from_slice(&part);
        Ok(())
    };

    let breaks = [(x - reach).abs(), x + reach];
    let pieces = seeded_pieces(dlo, t, &breaks);
    integrate_pieces(&outer, &pieces, cs.len(), &lag_opts, "source lag integral")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{plane_collided_many, plane_flux};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    // Uncollided values from 30-digit arithmetic on the reduced integral.
    #[test]
    fn square_uncollided_reference_value() {
        let src = SourceConfig::square_default();
        let got = source_uncollided(&src, 0.0, 1.0).unwrap();
        assert_relative_eq!(got, 0.56366417047768684543, max_relative = 1e-11);
    }

    #[test]
    fn gaussian_uncollided_reference_values() {
        let src = SourceConfig::gaussian_default();
        let got = source_uncollided(&src, 0.0, 1.0).unwrap();
        assert_relative_eq!(got, 0.50195044684663994185, max_relative = 1e-11);
        let got = source_uncollided(&src, 1.0, 2.0).unwrap();
        assert_relative_eq!(got, 0.10491846331157801549, max_relative = 1e-11);
    }

    // Collided values from double-exponential/adaptive quadrature of the
    // same convolution at relative tolerance 1e-10 with a 200-node fixed
    // kernel rule.
    #[test]
    fn square_collided_reference_values() {
        let src = SourceConfig::square_default();
        let opts = default_source_opts().with_rel_tol(1e-9);
        for (x, t, c, want) in [
            (0.0, 1.0, 1.0, 3.262134145022215e-01),
            (0.75, 2.0, 1.0, 3.335794811241430e-01),
            (0.0, 5.0, 1.0, 1.585362630241159e+00),
        ] {
            let got = source_collided_with(&src, x, t, c, &opts).unwrap();
            assert_relative_eq!(got, want, max_relative = 5e-8);
        }
    }

    #[test]
    fn gaussian_collided_reference_values() {
        let src = SourceConfig::gaussian_default();
        let opts = default_source_opts().with_rel_tol(1e-9);
        for (x, t, c, want) in [
            (0.0, 1.0, 1.0, 2.787566600594579e-01),
            (1.0, 2.0, 1.0, 1.874617809421688e-01),
        ] {
            let got = source_collided_with(&src, x, t, c, &opts).unwrap();
            assert_relative_eq!(got, want, max_relative = 5e-8);
        }
    }

    // Brute-force check of the convolution machinery itself: composite
    // Simpson on the raw double integral, sharing only the plane kernel
    // with the production path.
    fn brute_collided(src: &SourceConfig<f64>, x: f64, t: f64, c: f64, n: usize) -> f64 {
        let (reach, duration, gaussian) = match *src {
            SourceConfig::Square {
                half_width,
                duration,
            } => (half_width, duration, None),
            SourceConfig::Gaussian { sigma, duration } => {
                (sigma * GAUSS_REACH_SIGMAS, duration, Some(sigma))
            }
            _ => unreachable!(),
        };
        let dlo = (t - duration).max(0.0);
        let h = (t - dlo) / n as f64;
        let opts = AdaptiveOpts::default();
        let mut total = 0.0;
        for i in 1..=n {
            let lag = dlo + i as f64 * h;
            let lo = (x - reach).max(-lag);
            let hi = (x + reach).min(lag);
            if lo >= hi {
                continue;
            }
            let m = n;
            let hy = (hi - lo) / m as f64;
            let mut row = 0.0;
            for j in 0..=m {
                let y = lo + j as f64 * hy;
                let simpson = if j == 0 || j == m {
                    1.0
                } else if j % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                let mut k = plane_collided_many(y, lag, &[c], &opts).unwrap()[0];
                if let Some(sig) = gaussian {
                    k *= (-((x - y) / sig).powi(2)).exp();
                }
                row += simpson * k;
            }
            row *= hy / 3.0;
            let simpson_outer = if i == n {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            total += simpson_outer * row;
        }
        total * h / 3.0
    }

    #[test]
    fn collided_convolution_matches_brute_force() {
        let square = SourceConfig::square_default();
        let got = source_collided(&square, 0.75, 2.0, 1.0).unwrap();
        let brute = brute_collided(&square, 0.75, 2.0, 1.0, 400);
        assert_relative_eq!(got, brute, max_relative = 5e-4);

        let gaussian = SourceConfig::gaussian_default();
        let got = source_collided(&gaussian, 1.0, 2.0, 1.0).unwrap();
        let brute = brute_collided(&gaussian, 1.0, 2.0, 1.0, 400);
        assert_relative_eq!(got, brute, max_relative = 5e-4);
    }

    // A short, narrow square emission approaches the plane pulse with
    // strength 2 * half_width * duration centered on the emission window.
    #[test]
    fn square_approaches_plane_pulse_in_small_source_limit() {
        let src = SourceConfig::Square {
            half_width: 0.01,
            duration: 0.01,
        };
        let strength = 2.0 * 0.01 * 0.01;
        let got = source_flux(&src, 0.5, 1.005, 1.0).unwrap();
        let reference = plane_flux(0.5, 1.0, 1.0).unwrap();
        assert_relative_eq!(
            got.total() / strength,
            reference.total(),
            max_relative = 1e-2
        );
    }

    #[test]
    fn flux_is_even_in_position() {
        let opts = default_source_opts().with_rel_tol(1e-6);
        for src in [
            SourceConfig::square_default(),
            SourceConfig::gaussian_default(),
        ] {
            let plus = source_collided_with(&src, 0.3, 0.8, 1.0, &opts).unwrap();
            let minus = source_collided_with(&src, -0.3, 0.8, 1.0, &opts).unwrap();
            assert_eq!(plus, minus);
            let plus = source_uncollided(&src, 0.3, 0.8).unwrap();
            let minus = source_uncollided(&src, -0.3, 0.8).unwrap();
            assert_eq!(plus, minus);
        }
    }

    // Unlike the bare pulse, the extended source still shines at the
    // similarity front |x| = t while it is on, and cuts off exactly at
    // half_width + t.
    #[test]
    fn square_flux_straddles_the_pulse_front() {
        let src = SourceConfig::square_default();
        let f = source_flux(&src, 0.8, 0.8, 1.0).unwrap();
        assert!(f.uncollided > 0.0 && f.collided > 0.0);
        let f = source_flux(&src, 1.3, 0.8, 1.0).unwrap();
        assert_eq!(f.uncollided, 0.0);
        assert_eq!(f.collided, 0.0);
    }

    #[test]
    fn duration_beyond_time_is_inert() {
        let short = SourceConfig::Square {
            half_width: 0.5,
            duration: 1.0,
        };
        let long = SourceConfig::Square {
            half_width: 0.5,
            duration: 1e9,
        };
        let opts = default_source_opts().with_rel_tol(1e-6);
        let a = source_collided_with(&short, 0.2, 0.9, 1.0, &opts).unwrap();
        let b = source_collided_with(&long, 0.2, 0.9, 1.0, &opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            source_uncollided(&short, 0.2, 0.9).unwrap(),
            source_uncollided(&long, 0.2, 0.9).unwrap()
        );
    }

    #[test]
    fn shutoff_reduces_flux() {
        let short = SourceConfig::Square {
            half_width: 0.5,
            duration: 0.5,
        };
        let long = SourceConfig::square_default();
        let opts = default_source_opts().with_rel_tol(1e-6);
        let a = source_collided_with(&short, 0.0, 1.0, 1.0, &opts).unwrap();
        let b = source_collided_with(&long, 0.0, 1.0, 1.0, &opts).unwrap();
        assert!(a < b);
        assert!(
            source_uncollided(&short, 0.0, 1.0).unwrap()
                < source_uncollided(&long, 0.0, 1.0).unwrap()
        );
    }

    #[test]
    fn batched_matches_scalar_calls() {
        let src = SourceConfig::square_default();
        let opts = default_source_opts().with_rel_tol(1e-7);
        let cs = [0.5, 1.0];
        let batch = source_collided_many(&src, 0.3, 1.0, &cs, &opts).unwrap();
        for (&c, &b) in cs.iter().zip(&batch) {
            let scalar = source_collided_with(&src, 0.3, 1.0, c, &opts).unwrap();
            assert_relative_eq!(b, scalar, max_relative = 1e-7);
        }
        assert!(batch[0] < batch[1]);
    }

    #[test]
    fn zero_scattering_has_zero_collided_flux() {
        for src in [
            SourceConfig::square_default(),
            SourceConfig::gaussian_default(),
        ] {
            assert_eq!(source_collided(&src, 0.1, 0.7, 0.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let bad = SourceConfig::Square {
            half_width: -0.5,
            duration: 5.0,
        };
        assert!(bad.validate().is_err());
        assert!(source_uncollided(&bad, 0.0, 1.0).is_err());
        let bad = SourceConfig::Gaussian {
            sigma: 0.5,
            duration: f64::NAN,
        };
        assert!(bad.validate().is_err());
        let good = SourceConfig::square_default();
        assert!(source_uncollided(&good, 0.0, -1.0).is_err());
        assert!(source_collided(&good, f64::NAN, 1.0, 1.0).is_err());
        assert!(source_collided(&good, 0.0, 1.0, -0.3).is_err());
    }

    #[test]
    fn config_serialization_round_trips() {
        let src = SourceConfig::gaussian_default();
        let text = serde_json::to_string(&src).unwrap();
        assert_eq!(text, r#"{"kind":"gaussian","sigma":0.5,"duration":5.0}"#);
        let back: SourceConfig<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, src);
        let plane: SourceConfig<f64> = serde_json::from_str(r#"{"kind":"plane"}"#).unwrap();
        assert_eq!(plane, SourceConfig::Plane);
    }

    #[test]
    fn support_radius_bounds_the_flux() {
        let src = SourceConfig::gaussian_default();
        let r = src.support_radius(1.0);
        assert_eq!(r, 0.5 * GAUSS_REACH_SIGMAS + 1.0);
        assert_eq!(source_uncollided(&src, r, 1.0).unwrap(), 0.0);
        assert_eq!(source_collided(&src, r + 0.1, 1.0, 1.0).unwrap(), 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn uncollided_is_nonnegative_and_even(
            x in -2.0f64..2.0,
            t in 0.2f64..1.5,
        ) {
            let src = SourceConfig::square_default();
            let v = source_uncollided(&src, x, t).unwrap();
            prop_assert!(v >= 0.0);
            prop_assert_eq!(v, source_uncollided(&src, -x, t).unwrap());
        }
    }
}
