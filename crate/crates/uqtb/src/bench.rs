//! Scripted benchmark studies over the flux and uncertainty machinery:
//! spatial moment/quantile profiles, convergence sweeps of the expansion
//! order and of the sample count, and the system-mass study across the
//! sub- and supercritical range.
//!
//! Every study is a pure function from a [`StudyConfig`] to a [`Table`]
//! of numbers; rendering (CSV, manifest) is separate, so tests inspect
//! tables directly. Studies are deterministic end to end: rerunning a
//! configuration reproduces every bit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pce::{ChaosExpansion, UncertainScatteringRatio};
use crate::quad::{integrate_pieces, nested_opts, seeded_pieces, AdaptiveOpts, Piece};
use crate::real::{count, lit, Real};
use crate::sources::{self, SourceConfig};
use crate::stats::{self, empirical_quantiles, quantile_oracle_grid};

/// Default number of spatial points in an auto-generated profile grid.
pub const PROFILE_GRID_POINTS: usize = 201;

/// The benchmark studies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    /// Spatial profiles of mean, one-sigma band, and percentiles.
    Profiles,
    /// RMSE of the expansion variance against direct quadrature, versus
    /// expansion order.
    VarianceConvergence,
    /// RMSE of sampled percentiles against the exact quantile map, versus
    /// sample count.
    QuantileConvergence,
    /// Nominal, expected, one-sigma, and median system mass across a grid
    /// of mean scattering ratios.
    MassVsCbar,
}

/// Complete description of one study run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig<T> {
    pub study_kind: StudyKind,
    pub source: SourceConfig<T>,
    pub uncertainty: UncertainScatteringRatio<T>,
    /// Observation times; convergence and mass studies use the first.
    pub times: Vec<T>,
    /// Profile positions. Empty means an auto grid of
    /// [`PROFILE_GRID_POINTS`] uniform points over the support at each
    /// time. The quantile-convergence study evaluates at the first entry.
    #[serde(default = "Vec::new")]
    pub spatial_grid: Vec<T>,
    /// Expansion degree N (the order sweep runs 1..=N).
    pub order: usize,
    /// Sample count for percentile estimation (the sample sweep runs
    /// decades up to this).
    pub n_samples: usize,
    pub percentile_grid: Vec<T>,
}

impl<T: Real> StudyConfig<T> {
    /// Moment and percentile profiles with a ten-percent uncertain ratio
    /// at early and intermediate times.
    pub fn default_profiles(source: SourceConfig<T>) -> Self {
        StudyConfig {
            study_kind: StudyKind::Profiles,
            source,
            uncertainty: UncertainScatteringRatio::new(T::one(), lit(0.1))
                .expect("default uncertainty is valid"),
            times: vec![T::one(), lit(5.0)],
            spatial_grid: Vec::new(),
            order: 6,
            n_samples: 1_000_000,
            percentile_grid: [0.05, 0.25, 0.5, 0.75, 0.95].map(lit).to_vec(),
        }
    }

    /// Expansion-order convergence of the variance for the plane pulse
    /// under a fifty-percent uncertain ratio at t = 5.
    pub fn default_variance_convergence() -> Self {
        StudyConfig {
            study_kind: StudyKind::VarianceConvergence,
            source: SourceConfig::Plane,
            uncertainty: UncertainScatteringRatio::new(T::one(), lit(0.5))
                .expect("default uncertainty is valid"),
            times: vec![lit(5.0)],
            spatial_grid: Vec::new(),
            order: 8,
            n_samples: 1_000_000,
            percentile_grid: vec![lit(0.5)],
        }
    }

    /// Sample-count convergence of plane-pulse percentiles at the origin,
    /// t = 5, with a twenty-five-percent uncertain ratio.
    pub fn default_quantile_convergence() -> Self {
        StudyConfig {
            study_kind: StudyKind::QuantileConvergence,
            source: SourceConfig::Plane,
            uncertainty: UncertainScatteringRatio::new(lit(1.1), lit(0.275))
                .expect("default uncertainty is valid"),
            times: vec![lit(5.0)],
            spatial_grid: vec![T::zero()],
            order: 8,
            n_samples: 1_000_000,
            percentile_grid: (1..100).map(|k| lit(k as f64 / 100.0)).collect(),
        }
    }

    /// Plane-pulse system mass at t = 3 across the ratio grid, with a
    /// twenty-five-percent uncertainty fraction.
    pub fn default_mass_study() -> Self {
        StudyConfig {
            study_kind: StudyKind::MassVsCbar,
            source: SourceConfig::Plane,
            uncertainty: UncertainScatteringRatio::new(T::one(), lit(0.25))
                .expect("default uncertainty is valid"),
            times: vec![lit(3.0)],
            spatial_grid: Vec::new(),
            order: 6,
            n_samples: 1_000_000,
            percentile_grid: vec![lit(0.5)],
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.source.validate()?;
        self.uncertainty.validate()?;
        if self.times.is_empty() {
            return Err(Error::config("study needs at least one time"));
        }
        for &t in &self.times {
            if !t.is_finite() || t <= T::zero() {
                return Err(Error::config(format!("times must be positive, got {t}")));
            }
        }
        for &x in &self.spatial_grid {
            if !x.is_finite() {
                return Err(Error::config(format!("grid positions must be finite, got {x}")));
            }
            if self.source.is_radial() && x < T::zero() {
                return Err(Error::config(format!(
                    "radial grids must be non-negative, got {x}"
                )));
            }
        }
        if self.order == 0 {
            return Err(Error::config("expansion order must be at least 1"));
        }
        match self.study_kind {
            StudyKind::Profiles | StudyKind::QuantileConvergence | StudyKind::MassVsCbar => {
                stats::check_percentile_grid(&self.percentile_grid)?;
                if self.n_samples < 100 {
                    return Err(Error::config(format!(
                        "sampled studies need at least 100 samples, got {}",
                        self.n_samples
                    )));
                }
            }
            StudyKind::VarianceConvergence => {}
        }
        if self.study_kind == StudyKind::QuantileConvergence && self.spatial_grid.is_empty() {
            return Err(Error::config(
                "the quantile-convergence study needs an explicit evaluation position",
            ));
        }
        Ok(())
    }
}

/// Column-labeled numeric results of a study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table<T> {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<T>>,
}

impl<T: Real> Table<T> {
    /// Renders the table as CSV with 17-significant-digit scientific
    /// values, enough to round-trip `f64` exactly.
    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let mut first = true;
            for v in row {
                if !first {
                    out.push(',');
                }
                out.push_str(&format!("{v:.16e}"));
                first = false;
            }
            out.push('\n');
        }
        out
    }

    /// The values of a named column, if present.
    pub fn column(&self, name: &str) -> Option<Vec<T>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }
}

/// JSON sidecar written next to each study's CSV, sufficient to reproduce
/// the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest<T> {
    pub study: StudyConfig<T>,
    /// File name of the CSV this manifest describes.
    pub output: String,
    /// Methodological remarks that the numbers alone do not carry.
    pub notes: Vec<String>,
}

/// Remarks recorded in the manifest of each study kind.
pub fn study_notes(kind: StudyKind) -> Vec<String> {
    match kind {
        StudyKind::Profiles => vec![
            "percentile columns are sampled from the chaos expansion with the sobol-sorted-linear estimator".to_string(),
        ],
        StudyKind::VarianceConvergence => vec![
            "rmse is taken over the spatial grid between the expansion variance and direct quadrature of the solver".to_string(),
        ],
        StudyKind::QuantileConvergence => vec![
            "reference quantiles map percentiles through the solver directly (strictly increasing in c)".to_string(),
        ],
        StudyKind::MassVsCbar => vec![
            "sigma is the standard deviation of the mass expansion itself, not a pointwise propagation".to_string(),
            "omega1 scales with cbar to keep the uncertainty fraction fixed across the grid".to_string(),
        ],
    }
}

fn at_point<T: Real, V>(coord: T, time: T, r: Result<V>) -> Result<V> {
    r.map_err(|e| Error::AtPoint {
        coord: coord.to_f64().unwrap_or(f64::NAN),
        time: time.to_f64().unwrap_or(f64::NAN),
        source: Box::new(e),
    })
}

// Convex-combination form: an [-R, R] grid mirrors bit-exactly.
fn linspace<T: Real>(a: T, b: T, n: usize) -> Vec<T> {
    if n == 1 {
        return vec![a];
    }
    let den = count::<T>(n - 1);
    (0..n)
        .map(|i| (a * count::<T>(n - 1 - i) + b * count::<T>(i)) / den)
        .collect()
}

/// Uniform profile grid over the support of `src` at time `t`: radial
/// sources span `[0, R]`, slab sources `[-R, R]`.
pub fn profile_grid<T: Real>(src: &SourceConfig<T>, t: T, points: usize) -> Vec<T> {
    let r = src.support_radius(t);
    if src.is_radial() {
        linspace(T::zero(), r, points)
    } else {
        linspace(-r, r, points)
    }
}

fn percentile_label<T: Real>(p: T) -> String {
    let v = p.to_f64().unwrap() * 100.0;
    let r = v.round();
    if (v - r).abs() < 1e-6 {
        format!("q{}", r as i64)
    } else {
        format!("q{v}")
    }
}

/// Spatial profiles of the flux statistics: one row per grid point and
/// time, columns `x, t, mean, sigma` and one per percentile.
pub fn run_profiles<T: Real>(cfg: &StudyConfig<T>) -> Result<Table<T>> {
    run_profiles_with(cfg, &sources::default_source_opts())
}

pub fn run_profiles_with<T: Real>(
    cfg: &StudyConfig<T>,
    opts: &AdaptiveOpts<T>,
) -> Result<Table<T>> {
    cfg.validate()?;
    expect_kind(cfg, StudyKind::Profiles)?;
    let mut columns = vec!["x".into(), "t".into(), "mean".into(), "sigma".into()];
    columns.extend(cfg.percentile_grid.iter().map(|&p| percentile_label(p)));
    let mut rows = Vec::new();
    for &t in &cfg.times {
        let grid = if cfg.spatial_grid.is_empty() {
            profile_grid(&cfg.source, t, PROFILE_GRID_POINTS)
        } else {
            cfg.spatial_grid.clone()
        };
        for &x in &grid {
            let exp = at_point(x, t, point_expansion(cfg, x, t, cfg.order, opts))?;
            let quant = at_point(
                x,
                t,
                empirical_quantiles(&exp, cfg.n_samples, &cfg.percentile_grid),
            )?;
            let mut row = vec![x, t, exp.expectation(), exp.std_dev()];
            row.extend(quant.values);
            rows.push(row);
        }
    }
    Ok(Table { columns, rows })
}

/// Expansion of the total flux at one space-time point: collided part
/// projected, uncollided part carried as the deterministic offset.
fn point_expansion<T: Real>(
    cfg: &StudyConfig<T>,
    x: T,
    t: T,
    degree: usize,
    opts: &AdaptiveOpts<T>,
) -> Result<ChaosExpansion<T>> {
    let offset = sources::source_uncollided(&cfg.source, x, t)?;
    ChaosExpansion::project(cfg.uncertainty, degree, offset, |cs| {
        sources::source_collided_many(&cfg.source, x, t, cs, opts)
    })
}

/// RMSE between the expansion variance and direct quadrature of the
/// solver, for each order `1..=cfg.order` over the spatial grid. Columns
/// `order, rmse`.
pub fn run_variance_convergence<T: Real>(cfg: &StudyConfig<T>) -> Result<Table<T>> {
    run_variance_convergence_with(cfg, &AdaptiveOpts::default())
}

pub fn run_variance_convergence_with<T: Real>(
    cfg: &StudyConfig<T>,
    opts: &AdaptiveOpts<T>,
) -> Result<Table<T>> {
    cfg.validate()?;
    expect_kind(cfg, StudyKind::VarianceConvergence)?;
    let t = cfg.times[0];
    let grid = if cfg.spatial_grid.is_empty() {
        profile_grid(&cfg.source, t, PROFILE_GRID_POINTS)
    } else {
        cfg.spatial_grid.clone()
    };
    let mut sq_err = vec![T::zero(); cfg.order];
    for &x in &grid {
        let (_, direct_var) = at_point(
            x,
            t,
            stats::direct_moments(
                &cfg.uncertainty,
                |cs| sources::source_collided_many(&cfg.source, x, t, cs, opts),
                opts,
            ),
        )?;
        // One projection serves every truncation order: the coefficients
        // do not depend on where the series is cut.
        let exp = at_point(x, t, point_expansion(cfg, x, t, cfg.order, opts))?;
        for n in 1..=cfg.order {
            let d = exp.variance_through(n) - direct_var;
            sq_err[n - 1] = sq_err[n - 1] + d * d;
        }
    }
    let m = count::<T>(grid.len());
    let rows = (1..=cfg.order)
        .map(|n| vec![count::<T>(n), (sq_err[n - 1] / m).sqrt()])
        .collect();
    Ok(Table {
        columns: vec!["order".into(), "rmse".into()],
        rows,
    })
}

/// RMSE between sampled percentiles of the expansion and the exact
/// quantile map of the solver, for sample counts sweeping decades up to
/// `cfg.n_samples`. Columns `n_samples, rmse`.
pub fn run_quantile_convergence<T: Real>(cfg: &StudyConfig<T>) -> Result<Table<T>> {
    run_quantile_convergence_with(cfg, &AdaptiveOpts::default())
}

pub fn run_quantile_convergence_with<T: Real>(
    cfg: &StudyConfig<T>,
    opts: &AdaptiveOpts<T>,
) -> Result<Table<T>> {
    cfg.validate()?;
    expect_kind(cfg, StudyKind::QuantileConvergence)?;
    let t = cfg.times[0];
    let x = cfg.spatial_grid[0];
    let offset = sources::source_uncollided(&cfg.source, x, t)?;
    let reference = at_point(
        x,
        t,
        quantile_oracle_grid(&cfg.uncertainty, &cfg.percentile_grid, |cs| {
            let collided = sources::source_collided_many(&cfg.source, x, t, cs, opts)?;
            Ok(collided.into_iter().map(|v| v + offset).collect())
        }),
    )?;
    let exp = at_point(x, t, point_expansion(cfg, x, t, cfg.order, opts))?;
    let mut rows = Vec::new();
    let mut n = 100usize;
    while n <= cfg.n_samples {
        let est = empirical_quantiles(&exp, n, &cfg.percentile_grid)?;
        let mut acc = T::zero();
        for (&e, &r) in est.values.iter().zip(&reference) {
            let d = e - r;
            acc = acc + d * d;
        }
        let rmse = (acc / count::<T>(reference.len())).sqrt();
        rows.push(vec![count::<T>(n), rmse]);
        n = n.saturating_mul(10);
    }
    Ok(Table {
        columns: vec!["n_samples".into(), "rmse".into()],
        rows,
    })
}

/// Nominal system mass of the plane pulse: the spatial integral of the
/// flux collapses to `exp(t (c - 1))`.
pub fn mass_analytic<T: Real>(t: T, c: T) -> T {
    (t * (c - T::one())).exp()
}

/// Expectation of [`mass_analytic`] over an uncertain ratio:
/// `exp(t (cbar - 1)) sinh(omega1 t) / (omega1 t)`.
pub fn mass_expectation_analytic<T: Real>(t: T, unc: &UncertainScatteringRatio<T>) -> T {
    let w = unc.omega1() * t;
    let spread = if w == T::zero() {
        T::one()
    } else {
        w.sinh() / w
    };
    mass_analytic(t, unc.cbar()) * spread
}

/// System mass by spatial quadrature of the flux over its support.
pub fn mass_numeric<T: Real>(src: &SourceConfig<T>, t: T, c: T) -> Result<T> {
    mass_numeric_with(src, t, c, &AdaptiveOpts::default().with_rel_tol(lit(1e-9)))
}

pub fn mass_numeric_with<T: Real>(
    src: &SourceConfig<T>,
    t: T,
    c: T,
    opts: &AdaptiveOpts<T>,
) -> Result<T> {
    Ok(mass_numeric_many(src, t, &[c], opts)?[0])
}

/// [`mass_numeric`] for a batch of ratios sharing one spatial panel
/// decomposition.
///
/// Slab geometries integrate the total flux over `[0, R]` and double it;
/// the line source integrates `2 pi r` times the collided flux and adds
/// the uncollided mass `e^{-t}` in closed form, because its integrand
/// carries an inverse-square-root front divergence that is exact under
/// the substitution but hostile to quadrature. Nodes cluster toward the
/// support edge where the collided flux vanishes with singular slope.
pub fn mass_numeric_many<T: Real>(
    src: &SourceConfig<T>,
    t: T,
    cs: &[T],
    opts: &AdaptiveOpts<T>,
) -> Result<Vec<T>> {
    src.validate()?;
    let sup = src.support_radius(t);
    let cluster_start = sup * lit::<T>(0.95);
    let mut breaks = vec![t];
    if let SourceConfig::Square { half_width, .. } = *src {
        breaks.push(half_width);
        breaks.push((t - half_width).abs());
    }
    breaks.retain(|&b| b > T::zero() && b < cluster_start);
    let mut pieces = seeded_pieces(T::zero(), cluster_start, &breaks);
    pieces.push(Piece::ClusterUpper {
        a: cluster_start,
        b: sup,
    });
    let x_opts = opts.with_order(16);
    let flux_opts = nested_opts(opts);
    let line = src.is_radial();
    let two_pi = T::PI() + T::PI();
    let f = |x: T, out: &mut [T]| -> Result<()> {
        let collided = sources::source_collided_many(src, x, t, cs, &flux_opts)?;
        let weight = if line { two_pi * x } else { lit(2.0) };
        let uncollided = if line {
            T::zero()
        } else {
            sources::source_uncollided(src, x, t)?
        };
        for (o, v) in out.iter_mut().zip(collided) {
            *o = (v + uncollided) * weight;
        }
        Ok(())
    };
    let mut total = integrate_pieces(&f, &pieces, cs.len(), &x_opts, "system mass")?;
    if line {
        let uncollided_mass = (-t).exp();
        for v in &mut total {
            *v = *v + uncollided_mass;
        }
    }
    Ok(total)
}

/// Grid of mean scattering ratios for the mass study: 0.4 to 1.4 in steps
/// of 0.05, both sub- and supercritical.
pub fn mass_cbar_grid<T: Real>() -> Vec<T> {
    (0..=20).map(|k| lit(0.4 + 0.05 * k as f64)).collect()
}

/// Mass statistics across the ratio grid. Columns `cbar, nominal, mean,
/// sigma, median`; the uncertainty half-width scales as
/// `cfg.uncertainty` prescribes relative to its own mean.
pub fn run_mass_study<T: Real>(cfg: &StudyConfig<T>) -> Result<Table<T>> {
    run_mass_study_with(cfg, &AdaptiveOpts::default().with_rel_tol(lit(1e-9)))
}

pub fn run_mass_study_with<T: Real>(
    cfg: &StudyConfig<T>,
    opts: &AdaptiveOpts<T>,
) -> Result<Table<T>> {
    cfg.validate()?;
    expect_kind(cfg, StudyKind::MassVsCbar)?;
    let t = cfg.times[0];
    let fraction = cfg.uncertainty.omega1() / cfg.uncertainty.cbar();
    let mut rows = Vec::new();
    for cbar in mass_cbar_grid::<T>() {
        let unc = at_point(
            cbar,
            t,
            UncertainScatteringRatio::new(cbar, fraction * cbar),
        )?;
        let exp = at_point(
            cbar,
            t,
            ChaosExpansion::project(unc, cfg.order, T::zero(), |cs| {
                mass_numeric_many(&cfg.source, t, cs, opts)
            }),
        )?;
        let median = at_point(
            cbar,
            t,
            empirical_quantiles(&exp, cfg.n_samples, &[lit(0.5)]),
        )?
        .values[0];
        rows.push(vec![
            cbar,
            mass_analytic(t, cbar),
            exp.expectation(),
            exp.std_dev(),
            median,
        ]);
    }
    Ok(Table {
        columns: ["cbar", "nominal", "mean", "sigma", "median"]
            .map(String::from)
            .to_vec(),
        rows,
    })
}

fn expect_kind<T: Real>(cfg: &StudyConfig<T>, want: StudyKind) -> Result<()> {
    if cfg.study_kind == want {
        Ok(())
    } else {
        Err(Error::config(format!(
            "study runner does not handle {:?} configurations",
            cfg.study_kind
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn default_configs_validate_and_round_trip() {
        for cfg in [
            StudyConfig::<f64>::default_profiles(SourceConfig::Plane),
            StudyConfig::default_profiles(SourceConfig::square_default()),
            StudyConfig::default_variance_convergence(),
            StudyConfig::default_quantile_convergence(),
            StudyConfig::default_mass_study(),
        ] {
            cfg.validate().unwrap();
            let text = serde_json::to_string(&cfg).unwrap();
            let back: StudyConfig<f64> = serde_json::from_str(&text).unwrap();
            assert_eq!(back, cfg);
        }
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = StudyConfig::<f64>::default_profiles(SourceConfig::Plane);
        cfg.times = vec![];
        assert!(cfg.validate().is_err());
        let mut cfg = StudyConfig::<f64>::default_profiles(SourceConfig::Plane);
        cfg.times = vec![-1.0];
        assert!(cfg.validate().is_err());
        let mut cfg = StudyConfig::<f64>::default_profiles(SourceConfig::Line);
        cfg.spatial_grid = vec![-0.5];
        assert!(cfg.validate().is_err());
        let mut cfg = StudyConfig::<f64>::default_profiles(SourceConfig::Plane);
        cfg.order = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = StudyConfig::<f64>::default_profiles(SourceConfig::Plane);
        cfg.percentile_grid = vec![0.5, 0.25];
        assert!(cfg.validate().is_err());
        let mut cfg = StudyConfig::<f64>::default_quantile_convergence();
        cfg.spatial_grid = vec![];
        assert!(cfg.validate().is_err());
        // a runner handed the wrong kind refuses it
        let cfg = StudyConfig::<f64>::default_mass_study();
        assert!(run_profiles(&cfg).is_err());
    }

    #[test]
    fn table_csv_and_column_access() {
        let table = Table {
            columns: vec!["a".to_string(), "b".to_string()],
            rows: vec![vec![1.0, 2.0], vec![3.0, 4.0]],
        };
        let csv = table.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("a,b"));
        assert_eq!(
            lines.next(),
            Some("1.0000000000000000e0,2.0000000000000000e0")
        );
        assert_eq!(table.column("b"), Some(vec![2.0, 4.0]));
        assert_eq!(table.column("missing"), None);
    }

    #[test]
    fn percentile_labels_read_as_percents() {
        assert_eq!(percentile_label(0.05), "q5");
        assert_eq!(percentile_label(0.5), "q50");
        assert_eq!(percentile_label(0.99), "q99");
        assert_eq!(percentile_label(0.005), "q0.5");
    }

    #[test]
    fn auto_profile_grids_span_the_support() {
        let grid = profile_grid(&SourceConfig::<f64>::Plane, 2.0, 5);
        assert_eq!(grid, vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        let grid = profile_grid(&SourceConfig::<f64>::Line, 2.0, 3);
        assert_eq!(grid, vec![0.0, 1.0, 2.0]);
        let grid = profile_grid(&SourceConfig::square_default(), 2.0, 3);
        assert_eq!(grid, vec![-2.5, 0.0, 2.5]);
    }

    #[test]
    fn plane_mass_matches_the_closed_form() {
        for (t, c, want) in [
            (3.0, 1.0, 1.0),
            (3.0, 1.25, (0.75f64).exp()),
            (2.0, 0.0, (-2.0f64).exp()),
        ] {
            let got = mass_numeric(&SourceConfig::Plane, t, c).unwrap();
            assert_relative_eq!(got, want, max_relative = 1e-8);
        }
    }

    #[test]
    fn line_mass_matches_the_closed_form() {
        let got = mass_numeric_with(
            &SourceConfig::Line,
            1.0,
            0.7,
            &AdaptiveOpts::default().with_rel_tol(1e-7),
        )
        .unwrap();
        assert_relative_eq!(got, (-0.3f64).exp(), max_relative = 1e-5);
    }

    // While a unit-rate slab source is on and c = 1, every emitted
    // particle survives: the mass is the emission rate times t.
    #[test]
    fn square_mass_grows_linearly_while_critical() {
        let src = SourceConfig::square_default();
        let got = mass_numeric_with(&src, 0.4, 1.0, &AdaptiveOpts::default().with_rel_tol(1e-5))
            .unwrap();
        assert_relative_eq!(got, 0.4, max_relative = 1e-5);
    }

    #[test]
    fn mass_expectation_closed_form_agrees_with_quadrature() {
        let t = 3.0;
        let unc = UncertainScatteringRatio::new(1.1, 0.275).unwrap();
        let want = crate::quad::integrate(
            |theta: f64| Ok(mass_analytic(t, unc.realize(theta))),
            -1.0,
            1.0,
            &AdaptiveOpts::default(),
            "mass average",
        )
        .unwrap()
            * 0.5;
        assert_relative_eq!(
            mass_expectation_analytic(t, &unc),
            want,
            max_relative = 1e-12
        );
        let degenerate = UncertainScatteringRatio::new(0.8, 0.0).unwrap();
        assert_eq!(
            mass_expectation_analytic(t, &degenerate),
            mass_analytic(t, 0.8)
        );
    }

    #[test]
    fn variance_convergence_study_shrinks_with_order() {
        let mut cfg = StudyConfig::<f64>::default_variance_convergence();
        cfg.spatial_grid = vec![0.0, 2.5];
        cfg.order = 4;
        let table = run_variance_convergence(&cfg).unwrap();
        assert_eq!(table.columns, vec!["order", "rmse"]);
        let rmse = table.column("rmse").unwrap();
        assert_eq!(rmse.len(), 4);
        assert!(rmse.windows(2).all(|w| w[1] <= w[0]), "{rmse:?}");
        assert!(rmse[3] < 1e-3, "{rmse:?}");
    }

    #[test]
    fn quantile_convergence_study_shrinks_with_samples() {
        let mut cfg = StudyConfig::<f64>::default_quantile_convergence();
        cfg.n_samples = 10_000;
        let table = run_quantile_convergence(&cfg).unwrap();
        assert_eq!(table.columns, vec!["n_samples", "rmse"]);
        let n = table.column("n_samples").unwrap();
        assert_eq!(n, vec![100.0, 1000.0, 10_000.0]);
        let rmse = table.column("rmse").unwrap();
        assert!(rmse.windows(2).all(|w| w[1] < w[0]), "{rmse:?}");
        assert!(rmse[2] < 1e-3, "{rmse:?}");
    }

    #[test]
    fn profile_study_emits_the_expected_shape() {
        let mut cfg = StudyConfig::<f64>::default_profiles(SourceConfig::Plane);
        cfg.times = vec![1.0];
        cfg.spatial_grid = vec![0.0, 0.5, 0.95];
        cfg.n_samples = 2000;
        let table = run_profiles(&cfg).unwrap();
        assert_eq!(
            table.columns,
            vec!["x", "t", "mean", "sigma", "q5", "q25", "q50", "q75", "q95"]
        );
        assert_eq!(table.rows.len(), 3);
        let mean = table.column("mean").unwrap();
        let sigma = table.column("sigma").unwrap();
        assert!(mean.iter().all(|&m| m > 0.0));
        // spread maximal at the center, vanishing toward the front
        assert!(sigma[0] > sigma[1] && sigma[1] > sigma[2]);
        // percentile columns bracket the mean from below and above
        let q5 = table.column("q5").unwrap();
        let q95 = table.column("q95").unwrap();
        assert!(q5[0] < mean[0] && mean[0] < q95[0]);
        // rerunning is bit-identical
        assert_eq!(run_profiles(&cfg).unwrap(), table);
    }

    #[test]
    fn mass_study_median_tracks_the_nominal_mass() {
        let mut cfg = StudyConfig::<f64>::default_mass_study();
        cfg.n_samples = 100_000;
        let table = run_mass_study(&cfg).unwrap();
        assert_eq!(
            table.columns,
            vec!["cbar", "nominal", "mean", "sigma", "median"]
        );
        assert_eq!(table.rows.len(), 21);
        let cbar = table.column("cbar").unwrap();
        let nominal = table.column("nominal").unwrap();
        let mean = table.column("mean").unwrap();
        let median = table.column("median").unwrap();
        for i in 0..cbar.len() {
            assert_relative_eq!(median[i], nominal[i], max_relative = 1e-3);
            // averaging a convex function of c only raises the mass
            assert!(mean[i] >= nominal[i]);
            let unc = UncertainScatteringRatio::new(cbar[i], 0.25 * cbar[i]).unwrap();
            assert_relative_eq!(
                mean[i],
                mass_expectation_analytic(3.0, &unc),
                max_relative = 1e-8
            );
        }
    }
}
