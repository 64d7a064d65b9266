//! Scalar-flux kernels for an instantaneous isotropic pulse in an infinite,
//! isotropically scattering medium, in plane, point, and line geometry.
//!
//! Units: lengths in mean free paths, times in mean free times, so the
//! total cross section is 1 and the only material parameter is the
//! scattering ratio `c` (mean secondaries per collision). Every kernel
//! factors through the similarity variable `eta = |x| / t`; the flux
//! vanishes identically outside the wavefront `eta >= 1`.
//!
//! The collided flux is a single integral over a transform variable
//! `u` in `[0, pi]`. With `q = (1 + eta) / (1 - eta)` and
//!
//! ```text
//! A = ln q + i u,      D = eta cos(u/2) + i sin(u/2),      xi = A cos(u/2) / D,
//! ```
//!
//! the plane-pulse integrand is `Re[(A/D)^2 exp(beta xi)]` where
//! `beta = (c t / 2)(1 - eta^2)`. Writing the prefactor as `(A/D)^2`
//! instead of the equivalent `sec^2(u/2) xi^2` keeps it finite over the
//! whole interval: at `u = pi` the latter is an indeterminate `inf * 0`
//! product while `A/D` simply tends to `-i A`.
//!
//! Point and line kernels are exact transforms of the plane kernel: the
//! point flux is `-(2 pi r)^{-1}` times the spatial derivative of the plane
//! flux (differentiated analytically under the `u`-integral), and the line
//! flux integrates the point flux along an axis. Each collided kernel has a
//! `*_collided_many` variant evaluating a whole batch of scattering ratios
//! in one adaptive pass; the geometry factors `A`, `D`, `xi` at each
//! quadrature node are shared across the batch, which is what makes
//! projection onto polynomial chaos modes affordable.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::quad::{integrate_pieces, AdaptiveOpts, Piece};
use crate::real::{lit, Real};

/// A space-time event `(x, t)` reduced to wavefront coordinates.
///
/// Holds `t > 0` and the canonical similarity variable `eta = |x| / t`;
/// the sign of the position is dropped because every kernel is even in it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityPoint<T> {
    time: T,
    eta: T,
}

impl<T: Real> SimilarityPoint<T> {
    /// Reduces `(position, time)`; `time` must be positive and finite.
    pub fn new(position: T, time: T) -> Result<Self> {
        if !time.is_finite() || time <= T::zero() {
            return Err(Error::domain(format!(
                "time must be positive and finite, got {time}"
            )));
        }
        if !position.is_finite() {
            return Err(Error::domain(format!(
                "position must be finite, got {position}"
            )));
        }
        Ok(SimilarityPoint {
            time,
            eta: (position / time).abs(),
        })
    }

    pub fn time(&self) -> T {
        self.time
    }

    /// `|x| / t`, in `[0, inf)`.
    pub fn eta(&self) -> T {
        self.eta
    }

    /// Strictly inside the expanding wavefront.
    pub fn inside_wavefront(&self) -> bool {
        self.eta < T::one()
    }

    /// Wavefront ratio `q = (1 + eta) / (1 - eta)`; `None` on or outside
    /// the front, where it is not finite.
    pub fn q(&self) -> Option<T> {
        if self.inside_wavefront() {
            Some((T::one() + self.eta) / (T::one() - self.eta))
        } else {
            None
        }
    }
}

/// Scalar flux split into its uncollided and collided components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxValue<T> {
    pub uncollided: T,
    pub collided: T,
}

impl<T: Real> FluxValue<T> {
    pub fn total(&self) -> T {
        self.uncollided + self.collided
    }

    fn zero() -> Self {
        FluxValue {
            uncollided: T::zero(),
            collided: T::zero(),
        }
    }
}

pub(crate) fn check_ratio<T: Real>(c: T) -> Result<()> {
    if !c.is_finite() || c < T::zero() {
        return Err(Error::domain(format!(
            "scattering ratio must be finite and non-negative, got {c}"
        )));
    }
    Ok(())
}

pub(crate) fn check_ratios<T: Real>(cs: &[T]) -> Result<()> {
    for &c in cs {
        check_ratio(c)?;
    }
    Ok(())
}

fn check_radius<T: Real>(r: T, strictly_positive: bool) -> Result<()> {
    if !r.is_finite() || r < T::zero() || (strictly_positive && r == T::zero()) {
        return Err(Error::domain(format!(
            "radius must be {} and finite, got {r}",
            if strictly_positive { "positive" } else { "non-negative" }
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// plane pulse

/// Uncollided flux of the plane pulse: `e^{-t} / (2t)` inside the
/// wavefront, zero outside.
pub fn plane_uncollided<T: Real>(x: T, t: T) -> Result<T> {
    let pt = SimilarityPoint::new(x, t)?;
    Ok(if pt.inside_wavefront() {
        (-t).exp() / (t + t)
    } else {
        T::zero()
    })
}

/// Collided flux of the plane pulse at scattering ratio `c`.
pub fn plane_collided<T: Real>(x: T, t: T, c: T) -> Result<T> {
    plane_collided_with(x, t, c, &AdaptiveOpts::default())
}

/// [`plane_collided`] with explicit quadrature controls.
pub fn plane_collided_with<T: Real>(x: T, t: T, c: T, opts: &AdaptiveOpts<T>) -> Result<T> {
    check_ratio(c)?;
    if c == T::zero() {
        // validate (x, t) even on the shortcut path
        SimilarityPoint::new(x, t)?;
        return Ok(T::zero());
    }
    Ok(plane_collided_many(x, t, &[c], opts)?[0])
}

/// Collided plane-pulse flux for a whole batch of scattering ratios.
///
/// All entries share one adaptive panel decomposition of the `u`-integral
/// and the per-node geometry factors; refinement continues until every
/// component meets the tolerance.
pub fn plane_collided_many<T: Real>(
    x: T,
    t: T,
    cs: &[T],
    opts: &AdaptiveOpts<T>,
) -> Result<Vec<T>> {
    let pt = SimilarityPoint::new(x, t)?;
    check_ratios(cs)?;
    plane_collided_core(pt.eta(), t, cs, opts)
}

/// Uncollided plus collided plane-pulse flux.
pub fn plane_flux<T: Real>(x: T, t: T, c: T) -> Result<FluxValue<T>> {
    plane_flux_with(x, t, c, &AdaptiveOpts::default())
}

pub fn plane_flux_with<T: Real>(x: T, t: T, c: T, opts: &AdaptiveOpts<T>) -> Result<FluxValue<T>> {
    Ok(FluxValue {
        uncollided: plane_uncollided(x, t)?,
        collided: plane_collided_with(x, t, c, opts)?,
    })
}

/// The collided plane flux decays like `(1 - eta) ln^2(1 - eta)` at the
/// front; inside this margin it is below ~1e-9 absolutely and dominated by
/// the rounding of `eta` itself, so the kernels return exact zero there.
pub(crate) const FRONT_MARGIN: f64 = 1e-12;

fn plane_collided_core<T: Real>(
    eta: T,
    t: T,
    cs: &[T],
    opts: &AdaptiveOpts<T>,
) -> Result<Vec<T>> {
    let one = T::one();
    if eta >= one - lit(FRONT_MARGIN) {
        return Ok(vec![T::zero(); cs.len()]);
    }
    let half = lit::<T>(0.5);
    let lq = ((one + eta) / (one - eta)).ln();
    let front = one - eta * eta;
    let b0 = t * half * front; // beta = c * b0, exponent = c * b0 * xi

    let f = |u: T, out: &mut [T]| -> Result<()> {
        let (s, m) = (u * half).sin_cos();
        let a = Complex::new(lq, u);
        let d = Complex::new(eta * m, s);
        let r = a / d;
        let r2 = r * r;
        let mu = r * (m * b0); // beta * xi for c = 1
        for (o, &c) in out.iter_mut().zip(cs) {
            *o = (r2 * (mu * c).exp()).re;
        }
        Ok(())
    };
    let pieces = [Piece::Plain {
        a: T::zero(),
        b: T::PI(),
    }];
    let j = integrate_pieces(&f, &pieces, cs.len(), opts, "collided plane flux")?;

    let pref = (-t).exp() * front / (lit::<T>(8.0) * T::PI());
    Ok(j.iter().zip(cs).map(|(&jk, &ck)| ck * pref * jk).collect())
}

// ---------------------------------------------------------------------------
// point pulse

/// Collided flux of the point pulse at radius `r > 0`.
///
/// Obtained from the plane kernel by `-(2 pi r)^{-1} d/dx`, with the
/// derivative taken analytically under the `u`-integral. Diverges
/// logarithmically as `r -> t` (the once-collided `ln q` term), and the
/// formula is a `0/0` limit at `r = 0`, which is rejected as a domain
/// error; it remains numerically stable for arbitrarily small positive `r`.
pub fn point_collided<T: Real>(r: T, t: T, c: T) -> Result<T> {
    point_collided_with(r, t, c, &AdaptiveOpts::default())
}

pub fn point_collided_with<T: Real>(r: T, t: T, c: T, opts: &AdaptiveOpts<T>) -> Result<T> {
    check_ratio(c)?;
    if c == T::zero() {
        check_radius(r, true)?;
        SimilarityPoint::new(r, t)?;
        return Ok(T::zero());
    }
    Ok(point_collided_many(r, t, &[c], opts)?[0])
}

/// Collided point-pulse flux for a batch of scattering ratios; see
/// [`plane_collided_many`] for the sharing contract.
pub fn point_collided_many<T: Real>(
    r: T,
    t: T,
    cs: &[T],
    opts: &AdaptiveOpts<T>,
) -> Result<Vec<T>> {
    check_radius(r, true)?;
    let pt = SimilarityPoint::new(r, t)?;
    check_ratios(cs)?;
    point_collided_core(T::one() - pt.eta(), r, t, cs, opts)
}

/// Point-pulse flux value.
///
/// The uncollided component is the singular shell
/// `e^{-t} delta(r - t) / (4 pi t^2)`, which has no pointwise value; this
/// field is therefore identically zero and the shell's mass `e^{-t}` must
/// be accounted for separately in any balance statement.
pub fn point_flux<T: Real>(r: T, t: T, c: T) -> Result<FluxValue<T>> {
    point_flux_with(r, t, c, &AdaptiveOpts::default())
}

pub fn point_flux_with<T: Real>(r: T, t: T, c: T, opts: &AdaptiveOpts<T>) -> Result<FluxValue<T>> {
    Ok(FluxValue {
        uncollided: T::zero(),
        collided: point_collided_with(r, t, c, opts)?,
    })
}

/// `delta` is the front distance `1 - eta`, passed explicitly because the
/// integrand diverges like `ln delta` at the front: callers that reach
/// `delta` through a change of variable (the line kernel) can supply it at
/// full precision instead of the ulp-of-1 resolution that recomputing
/// `1 - eta` would give.
fn point_collided_core<T: Real>(
    delta: T,
    r: T,
    t: T,
    cs: &[T],
    opts: &AdaptiveOpts<T>,
) -> Result<Vec<T>> {
    let one = T::one();
    if delta <= T::zero() {
        return Ok(vec![T::zero(); cs.len()]);
    }
    let half = lit::<T>(0.5);
    let two = lit::<T>(2.0);
    let eta = one - delta;
    let lq = ((two - delta) / delta).ln();
    let front = delta * (two - delta); // 1 - eta^2
    let b0 = t * half * front;
    let a_eta = two / front;

    // Integrand of the eta-derivative of (1 - eta^2) J(eta), as
    // Re[E (K0 + c K1)] with E = exp(c b0 xi):
    //   K0 = -2 eta (A/D)^2 + 2 (1 - eta^2) (A/D) P
    //   K1 = (1 - eta^2) (A/D)^2 (b0 cos(u/2) P - t eta xi)
    //   P  = (A_eta D - A cos(u/2)) / D^2
    // At eta = 0 both K0 and K1 are purely imaginary, so the integrand
    // vanishes pointwise and small radii stay well conditioned.
    let f = |u: T, out: &mut [T]| -> Result<()> {
        let (s, m) = (u * half).sin_cos();
        let a = Complex::new(lq, u);
        let d = Complex::new(eta * m, s);
        let r_ad = a / d;
        let r2 = r_ad * r_ad;
        let xi = r_ad * m;
        let p = (d * a_eta - a * m) / (d * d);
        let k0 = r2 * (-(eta + eta)) + r_ad * p * (front + front);
        let k1 = r2 * (p * (b0 * m) - xi * (t * eta)) * front;
        let mu = xi * b0;
        for (o, &c) in out.iter_mut().zip(cs) {
            *o = ((k0 + k1 * c) * (mu * c).exp()).re;
        }
        Ok(())
    };
    let pieces = [Piece::Plain {
        a: T::zero(),
        b: T::PI(),
    }];
    let h = integrate_pieces(&f, &pieces, cs.len(), opts, "collided point flux")?;

    let pi = T::PI();
    let pref = -(-t).exp() / (lit::<T>(16.0) * pi * pi * r * t);
    Ok(h.iter().zip(cs).map(|(&hk, &ck)| ck * pref * hk).collect())
}

// ---------------------------------------------------------------------------
// line pulse

/// Uncollided flux of the line pulse: the axial integral of the point
/// shell collapses to `e^{-t} / (2 pi t sqrt(t^2 - r^2))` inside the
/// front, diverging at `r = t` and zero beyond.
pub fn line_uncollided<T: Real>(r: T, t: T) -> Result<T> {
    check_radius(r, false)?;
    let pt = SimilarityPoint::new(r, t)?;
    if !pt.inside_wavefront() {
        return Ok(T::zero());
    }
    let two = lit::<T>(2.0);
    Ok((-t).exp() / (two * T::PI() * t * (t * t - r * r).sqrt()))
}

/// Collided flux of the line pulse at radius `r >= 0`.
pub fn line_collided<T: Real>(r: T, t: T, c: T) -> Result<T> {
    line_collided_with(r, t, c, &AdaptiveOpts::default())
}

pub fn line_collided_with<T: Real>(r: T, t: T, c: T, opts: &AdaptiveOpts<T>) -> Result<T> {
    check_ratio(c)?;
    if c == T::zero() {
        check_radius(r, false)?;
        SimilarityPoint::new(r, t)?;
        return Ok(T::zero());
    }
    Ok(line_collided_many(r, t, &[c], opts)?[0])
}

/// Collided line-pulse flux for a batch of scattering ratios.
///
/// Integrates the point kernel along the symmetry axis,
/// `2 int_0^{z*} phi_pt(sqrt(r^2 + z^2)) dz` with `z* = sqrt(t^2 - r^2)`,
/// rescaled to a unit interval. The integrand inherits the point kernel's
/// logarithmic wavefront divergence at the upper endpoint, handled by a
/// node-clustering change of variable. The outer error estimate of the
/// nested quadrature is reliable because each inner integral is resolved
/// well past the requested relative tolerance by its own doubled-order
/// comparison.
pub fn line_collided_many<T: Real>(
    r: T,
    t: T,
    cs: &[T],
    opts: &AdaptiveOpts<T>,
) -> Result<Vec<T>> {
    check_radius(r, false)?;
    let pt = SimilarityPoint::new(r, t)?;
    check_ratios(cs)?;
    if !pt.inside_wavefront() {
        return Ok(vec![T::zero(); cs.len()]);
    }

    // Integrate in w = 1 - s, the distance from the wavefront endpoint of
    // the rescaled axis: the point integrand diverges like the log of the
    // front distance there, and in terms of w that distance,
    // (t - rho) / t = zs^2 w (2 - w) / (t (t + rho)), is computed at full
    // relative precision however small it gets. (Mapping s directly would
    // quantize it to the ulp of 1, which the divergence amplifies into an
    // irreducible noise floor.)
    let zs = (t * t - r * r).sqrt();
    let inner = crate::quad::nested_opts(opts);
    let f = |w: T, out: &mut [T]| -> Result<()> {
        let sm = T::one() - w; // s
        let rho = (r * r + (zs * sm) * (zs * sm)).sqrt();
        let delta = zs * zs * w * (lit::<T>(2.0) - w) / (t * (t + rho));
        let vals = point_collided_core(delta, rho, t, cs, &inner)?;
        out.copy_from_slice(&vals);
        Ok(())
    };
    let pieces = [
        Piece::ClusterLower {
            a: T::zero(),
            b: lit(0.1),
        },
        Piece::Plain {
            a: lit(0.1),
            b: T::one(),
        },
    ];
    let ig = integrate_pieces(&f, &pieces, cs.len(), opts, "collided line flux")?;
    Ok(ig.iter().map(|&v| v * (zs + zs)).collect())
}

/// Line-pulse flux value (uncollided plus collided).
pub fn line_flux<T: Real>(r: T, t: T, c: T) -> Result<FluxValue<T>> {
    line_flux_with(r, t, c, &AdaptiveOpts::default())
}

pub fn line_flux_with<T: Real>(r: T, t: T, c: T, opts: &AdaptiveOpts<T>) -> Result<FluxValue<T>> {
    check_ratio(c)?;
    let pt = SimilarityPoint::new(r, t)?;
    check_radius(r, false)?;
    if !pt.inside_wavefront() {
        return Ok(FluxValue::zero());
    }
    Ok(FluxValue {
        uncollided: line_uncollided(r, t)?,
        collided: line_collided_with(r, t, c, opts)?,
    })
}
