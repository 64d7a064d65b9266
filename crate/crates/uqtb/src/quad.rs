//! Gauss-Legendre quadrature with adaptive bisection.
//!
//! Two layers live here:
//!
//! * [`QuadratureRule`]: classical Gauss-Legendre nodes and weights on
//!   `[-1, 1]`, exact for polynomials up to degree `2 * order - 1`.
//! * [`integrate_vec`] and friends: adaptive panel bisection driven by the
//!   difference between an `order` and a `2 * order` estimate on each panel.
//!   Integrands are vector-valued so a whole family of scattering ratios can
//!   share one panel decomposition; refinement is controlled by the worst
//!   component relative error.
//!
//! Integrable endpoint singularities (wavefront edges behave like
//! `s * log(s)` there) are handled by [`Piece::ClusterUpper`] /
//! [`Piece::ClusterLower`], which apply a quartic variable change that
//! clusters nodes at the offending endpoint and multiplies the integrand by
//! a Jacobian vanishing like the cube of the distance to it.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::real::{lit, Real};

/// Nodes and weights of a Gauss-Legendre rule on `[-1, 1]`.
///
/// Invariants: `nodes` ascend strictly, weights are positive and sum to the
/// reference interval length 2, and the rule integrates polynomials up to
/// degree `2 * order - 1` exactly (to roundoff).
#[derive(Debug, Clone)]
pub struct QuadratureRule<T> {
    order: usize,
    nodes: Vec<T>,
    weights: Vec<T>,
}

type NodeWeightTable = Arc<(Vec<f64>, Vec<f64>)>;

/// Node/weight tables are computed once per order in `f64` and converted;
/// root finding is the dominant setup cost in nested integrals otherwise.
static GAUSS_CACHE: OnceLock<Mutex<HashMap<usize, NodeWeightTable>>> = OnceLock::new();

fn gauss_legendre_f64(order: usize) -> NodeWeightTable {
    let cache = GAUSS_CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(hit) = cache.lock().expect("quadrature cache poisoned").get(&order) {
        return hit.clone();
    }

    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi-style initial guess, then Newton on P_n.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_pair(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() <= 1e-16 {
                let (_, d) = legendre_pair(n, z);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        // Guesses start near +1 and walk down; store ascending.
        nodes[i] = -z;
        weights[i] = w;
        nodes[n - 1 - i] = z;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }

    let entry = Arc::new((nodes, weights));
    cache
        .lock()
        .expect("quadrature cache poisoned")
        .insert(order, entry.clone());
    entry
}

/// Legendre polynomial `P_n` and its derivative at `x`, by the three-term
/// recurrence (derivative from the standard identity, `|x| != 1` here since
/// Gauss nodes are interior).
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 1..n {
        let next = ((2 * k + 1) as f64 * x * p - k as f64 * p_prev) / (k + 1) as f64;
        p_prev = p;
        p = next;
    }
    let d = n as f64 * (x * p - p_prev) / (x * x - 1.0);
    (p, d)
}

impl<T: Real> QuadratureRule<T> {
    /// Gauss-Legendre rule with `order` nodes. Panics for `order == 0`.
    pub fn gauss_legendre(order: usize) -> Self {
        assert!(order > 0, "quadrature order must be positive");
        let table = gauss_legendre_f64(order);
        QuadratureRule {
            order,
            nodes: table.0.iter().map(|&x| lit(x)).collect(),
            weights: table.1.iter().map(|&w| lit(w)).collect(),
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Fixed-order integral of `f` over `[a, b]`.
    pub fn integrate(&self, a: T, b: T, mut f: impl FnMut(T) -> T) -> T {
        let half = (b - a) * lit(0.5);
        let mid = (a + b) * lit(0.5);
        let mut acc = T::zero();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + w * f(mid + half * x);
        }
        acc * half
    }
}

/// Controls for the adaptive integrators.
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOpts<T> {
    /// Target relative error of the whole integral, per component.
    pub rel_tol: T,
    /// Absolute error floor, so identically-zero integrals terminate.
    pub abs_floor: T,
    /// Base panel order; each panel is also evaluated at twice this order
    /// and the difference drives refinement.
    pub order: usize,
    /// Panel budget per integration piece before reporting non-convergence.
    pub max_panels: usize,
}

impl<T: Real> Default for AdaptiveOpts<T> {
    fn default() -> Self {
        AdaptiveOpts {
            rel_tol: lit(1e-10),
            abs_floor: lit(1e-300),
            order: 64,
            max_panels: 1024,
        }
    }
}

impl<T: Real> AdaptiveOpts<T> {
    pub fn with_rel_tol(mut self, tol: T) -> Self {
        self.rel_tol = tol;
        self
    }

    pub fn with_order(mut self, order: usize) -> Self {
        self.order = order;
        self
    }
}

/// Tolerance for the inner integral of a nested quadrature: two orders
/// tighter than the enclosing one (floored near f64 resolution), so inner
/// truncation noise stays invisible to the outer error estimate and does
/// not trigger endless refinement.
pub(crate) fn nested_opts<T: Real>(opts: &AdaptiveOpts<T>) -> AdaptiveOpts<T> {
    let floor: T = lit(1e-13);
    let tightened = opts.rel_tol * lit(1e-2);
    AdaptiveOpts {
        rel_tol: if tightened < floor { floor } else { tightened },
        ..*opts
    }
}

/// One region of an integration domain, with optional node clustering at an
/// endpoint carrying an integrable singularity.
///
/// The cluster variants handle integrands that vanish with a singular
/// derivative (fractional powers, `s log s`) or diverge logarithmically at
/// the endpoint. Algebraic divergences such as `s^{-1/2}` are out of
/// scope: the integrand only ever sees the mapped abscissa, so the
/// distance to the endpoint is quantized to the ulp of the endpoint
/// itself, and for a diverging integrand that quantization noise grows
/// without bound as panels refine. Such factors must be removed
/// analytically before integrating.
#[derive(Debug, Clone, Copy)]
pub enum Piece<T> {
    Plain { a: T, b: T },
    /// Cluster nodes toward `a` (quartic map).
    ClusterLower { a: T, b: T },
    /// Cluster nodes toward `b` (quartic map).
    ClusterUpper { a: T, b: T },
}

struct Panel<T> {
    a: T,
    b: T,
    value: Vec<T>,
    err: Vec<T>,
}

/// Integrates a vector-valued function over a list of pieces.
///
/// `f(x, out)` must fill `out` (length `width`) with the integrand
/// components at `x`. Picked panels are bisected until every component's
/// accumulated error estimate drops under
/// `rel_tol * |integral| + abs_floor`, separately per piece.
pub fn integrate_pieces<T, F>(
    f: &F,
    pieces: &[Piece<T>],
    width: usize,
    opts: &AdaptiveOpts<T>,
    context: &'static str,
) -> Result<Vec<T>>
where
    T: Real,
    F: Fn(T, &mut [T]) -> Result<()>,
{
    let mut total = vec![T::zero(); width];
    for piece in pieces {
        let part = match *piece {
            Piece::Plain { a, b } => adaptive_core(f, a, b, width, opts, context)?,
            Piece::ClusterUpper { a, b } => {
                if b <= a {
                    continue;
                }
                let span = b - a;
                let four: T = lit(4.0);
                let g = |v: T, out: &mut [T]| -> Result<()> {
                    let d = T::one() - v;
                    let d3 = d * d * d;
                    let x = b - span * (d3 * d);
                    f(x, out)?;
                    let jac = four * span * d3;
                    for o in out.iter_mut() {
                        *o = *o * jac;
                    }
                    Ok(())
                };
                adaptive_core(&g, T::zero(), T::one(), width, opts, context)?
            }
            Piece::ClusterLower { a, b } => {
                if b <= a {
                    continue;
                }
                let span = b - a;
                let four: T = lit(4.0);
                let g = |v: T, out: &mut [T]| -> Result<()> {
                    let d = T::one() - v;
                    let d3 = d * d * d;
                    let x = a + span * (d3 * d);
                    f(x, out)?;
                    let jac = four * span * d3;
                    for o in out.iter_mut() {
                        *o = *o * jac;
                    }
                    Ok(())
                };
                adaptive_core(&g, T::zero(), T::one(), width, opts, context)?
            }
        };
        for (t, p) in total.iter_mut().zip(&part) {
            *t = *t + *p;
        }
    }
    Ok(total)
}

/// Adaptive bisection over a single interval; see [`integrate_pieces`].
pub fn integrate_vec<T, F>(
    f: &F,
    a: T,
    b: T,
    width: usize,
    opts: &AdaptiveOpts<T>,
    context: &'static str,
) -> Result<Vec<T>>
where
    T: Real,
    F: Fn(T, &mut [T]) -> Result<()>,
{
    adaptive_core(f, a, b, width, opts, context)
}

/// Scalar adaptive integral of `f` over `[a, b]`.
pub fn integrate<T, F>(
    f: F,
    a: T,
    b: T,
    opts: &AdaptiveOpts<T>,
    context: &'static str,
) -> Result<T>
where
    T: Real,
    F: Fn(T) -> Result<T>,
{
    let g = |x: T, out: &mut [T]| -> Result<()> {
        out[0] = f(x)?;
        Ok(())
    };
    Ok(adaptive_core(&g, a, b, 1, opts, context)?[0])
}

fn adaptive_core<T, F>(
    f: &F,
    a: T,
    b: T,
    width: usize,
    opts: &AdaptiveOpts<T>,
    context: &'static str,
) -> Result<Vec<T>>
where
    T: Real,
    F: Fn(T, &mut [T]) -> Result<()>,
{
    if b <= a {
        if b < a {
            return Err(Error::domain(format!(
                "reversed integration interval [{a}, {b}] in {context}"
            )));
        }
        return Ok(vec![T::zero(); width]);
    }

    let rule_lo = QuadratureRule::<T>::gauss_legendre(opts.order);
    let rule_hi = QuadratureRule::<T>::gauss_legendre(2 * opts.order);
    let mut scratch = vec![T::zero(); width];

    let mut panels = vec![eval_panel(f, a, b, width, &rule_lo, &rule_hi, &mut scratch)?];

    loop {
        let mut total = vec![T::zero(); width];
        let mut toterr = vec![T::zero(); width];
        for p in &panels {
            for k in 0..width {
                total[k] = total[k] + p.value[k];
                toterr[k] = toterr[k] + p.err[k];
            }
        }

        let mut worst = T::zero();
        for k in 0..width {
            let scale = total[k].abs() * opts.rel_tol + opts.abs_floor;
            let ratio = toterr[k] / scale;
            if ratio > worst {
                worst = ratio;
            }
        }
        if worst <= T::one() {
            return Ok(total);
        }
        if panels.len() >= opts.max_panels {
            return Err(Error::NonConvergence {
                context,
                achieved: worst.to_f64().unwrap_or(f64::NAN),
                required: 1.0,
                panels: panels.len(),
            });
        }

        // Split the panel with the largest normalized error contribution.
        let mut pick = 0;
        let mut pick_score = T::neg_infinity();
        for (i, p) in panels.iter().enumerate() {
            let mut score = T::zero();
            for (t, e) in total.iter().zip(&p.err) {
                let scale = t.abs() * opts.rel_tol + opts.abs_floor;
                let r = *e / scale;
                if r > score {
                    score = r;
                }
            }
            if score > pick_score {
                pick_score = score;
                pick = i;
            }
        }

        let Panel { a: pa, b: pb, .. } = panels[pick];
        let mid = (pa + pb) * lit(0.5);
        if mid <= pa || mid >= pb {
            // Interval is at floating-point resolution; cannot refine further.
            return Err(Error::NonConvergence {
                context,
                achieved: worst.to_f64().unwrap_or(f64::NAN),
                required: 1.0,
                panels: panels.len(),
            });
        }
        let left = eval_panel(f, pa, mid, width, &rule_lo, &rule_hi, &mut scratch)?;
        let right = eval_panel(f, mid, pb, width, &rule_lo, &rule_hi, &mut scratch)?;
        panels[pick] = left;
        panels.push(right);
    }
}

fn eval_panel<T, F>(
    f: &F,
    a: T,
    b: T,
    width: usize,
    rule_lo: &QuadratureRule<T>,
    rule_hi: &QuadratureRule<T>,
    scratch: &mut [T],
) -> Result<Panel<T>>
where
    T: Real,
    F: Fn(T, &mut [T]) -> Result<()>,
{
    let half = (b - a) * lit(0.5);
    let mid = (a + b) * lit(0.5);

    let mut lo = vec![T::zero(); width];
    for (&x, &w) in rule_lo.nodes().iter().zip(rule_lo.weights()) {
        f(mid + half * x, scratch)?;
        for k in 0..width {
            lo[k] = lo[k] + w * scratch[k];
        }
    }
    let mut hi = vec![T::zero(); width];
    for (&x, &w) in rule_hi.nodes().iter().zip(rule_hi.weights()) {
        f(mid + half * x, scratch)?;
        for k in 0..width {
            hi[k] = hi[k] + w * scratch[k];
        }
    }

    let mut err = vec![T::zero(); width];
    for k in 0..width {
        lo[k] = lo[k] * half;
        hi[k] = hi[k] * half;
        err[k] = (hi[k] - lo[k]).abs();
    }
    Ok(Panel {
        a,
        b,
        value: hi,
        err,
    })
}

/// Splits `[a, b]` at the given interior breakpoints, dropping duplicates
/// and points outside the interval. Used to seed panels where integrands
/// have kinks (wavefront crossings, source edges).
pub fn seeded_pieces<T: Real>(a: T, b: T, breaks: &[T]) -> Vec<Piece<T>> {
    let span = b - a;
    let tiny = span * lit(1e-14);
    let mut cuts: Vec<T> = breaks
        .iter()
        .copied()
        .filter(|&x| x > a + tiny && x < b - tiny)
        .collect();
    cuts.sort_by(|x, y| x.partial_cmp(y).expect("breakpoints must be ordered"));
    let mut pieces = Vec::with_capacity(cuts.len() + 1);
    let mut lo = a;
    for c in cuts {
        if c - lo > tiny {
            pieces.push(Piece::Plain { a: lo, b: c });
            lo = c;
        }
    }
    pieces.push(Piece::Plain { a: lo, b });
    pieces
}
