//! Command-line front end: parses a study configuration from flags and an
//! optional JSON file, dispatches the corresponding benchmark study, and
//! writes its CSV table plus a JSON manifest that reproduces the run.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 numerical
//! failure (non-convergence or domain violation), 4 I/O failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use uqtb::bench::{self, study_notes, RunManifest};
use uqtb::sources::{self, SourceConfig};
use uqtb::{Source64, Study64, StudyKind, Table64, Uncertain64};

const EXIT_USAGE: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(
    name = "uqtb",
    version,
    about = "Benchmark tables for time-dependent transport with an uncertain scattering ratio"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Spatial profiles of the flux mean, standard deviation, and percentiles
    Profile(StudyArgs),
    /// RMSE of the expansion variance against direct quadrature, per order
    ConvergeVariance(StudyArgs),
    /// RMSE of sampled percentiles against exact quantiles, per sample count
    ConvergeQuantile(StudyArgs),
    /// System-mass statistics across a grid of mean scattering ratios
    Mass(StudyArgs),
    /// Evaluate the flux at a single point for a fixed scattering ratio
    Eval(EvalArgs),
}

#[derive(Args)]
struct StudyArgs {
    /// JSON study configuration, or a manifest from an earlier run
    #[arg(long)]
    config: Option<PathBuf>,
    /// Source geometry
    #[arg(long, value_enum)]
    source: Option<SourceKind>,
    /// Half-width of the square source
    #[arg(long)]
    half_width: Option<f64>,
    /// Standard deviation of the gaussian source
    #[arg(long)]
    sigma: Option<f64>,
    /// Emission duration of a distributed source
    #[arg(long)]
    duration: Option<f64>,
    /// Mean scattering ratio
    #[arg(long)]
    cbar: Option<f64>,
    /// Half-width of the scattering-ratio interval
    #[arg(long)]
    omega1: Option<f64>,
    /// Observation times, comma separated
    #[arg(long, value_delimiter = ',')]
    t: Option<Vec<f64>>,
    /// Spatial evaluation points, comma separated (omit for an automatic grid)
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    /// Expansion order
    #[arg(long)]
    order: Option<usize>,
    /// Sample count for percentile estimation
    #[arg(long)]
    samples: Option<usize>,
    /// Percentiles in (0, 1), comma separated
    #[arg(long, value_delimiter = ',')]
    percentiles: Option<Vec<f64>>,
    /// Directory for the CSV and manifest (fallback: UQTB_OUTPUT_DIR, then .)
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Source geometry
    #[arg(long, value_enum, default_value = "plane")]
    source: SourceKind,
    /// Half-width of the square source
    #[arg(long)]
    half_width: Option<f64>,
    /// Standard deviation of the gaussian source
    #[arg(long)]
    sigma: Option<f64>,
    /// Emission duration of a distributed source
    #[arg(long)]
    duration: Option<f64>,
    /// Position (radius for the line source)
    #[arg(long, allow_hyphen_values = true)]
    x: f64,
    /// Observation time
    #[arg(long)]
    t: f64,
    /// Scattering ratio
    #[arg(long)]
    c: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SourceKind {
    Plane,
    Square,
    Gaussian,
    Line,
}

impl SourceKind {
    fn base(self) -> Source64 {
        match self {
            SourceKind::Plane => SourceConfig::Plane,
            SourceKind::Square => SourceConfig::square_default(),
            SourceKind::Gaussian => SourceConfig::gaussian_default(),
            SourceKind::Line => SourceConfig::Line,
        }
    }
}

enum CliError {
    Usage(String),
    Numeric(uqtb::Error),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Numeric(_) => EXIT_NUMERIC,
            CliError::Io(_) => EXIT_IO,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Usage(m) | CliError::Io(m) => m.clone(),
            CliError::Numeric(e) => e.to_string(),
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Profile(args) => run_study(StudyKind::Profiles, &args),
        Cmd::ConvergeVariance(args) => run_study(StudyKind::VarianceConvergence, &args),
        Cmd::ConvergeQuantile(args) => run_study(StudyKind::QuantileConvergence, &args),
        Cmd::Mass(args) => run_study(StudyKind::MassVsCbar, &args),
        Cmd::Eval(args) => run_eval(&args),
    }
}

fn run_study(kind: StudyKind, args: &StudyArgs) -> Result<(), CliError> {
    let cfg = build_config(kind, args)?;
    let table = dispatch(kind, &cfg).map_err(|e| match e {
        uqtb::Error::Io(_) | uqtb::Error::Serde(_) => CliError::Io(e.to_string()),
        other => CliError::Numeric(other),
    })?;
    write_outputs(kind, &cfg, &table, &output_dir(args))
}

fn dispatch(kind: StudyKind, cfg: &Study64) -> uqtb::Result<Table64> {
    match kind {
        StudyKind::Profiles => bench::run_profiles(cfg),
        StudyKind::VarianceConvergence => bench::run_variance_convergence(cfg),
        StudyKind::QuantileConvergence => bench::run_quantile_convergence(cfg),
        StudyKind::MassVsCbar => bench::run_mass_study(cfg),
    }
}

/// Defaults for the study kind, overlaid by the config file, overlaid by
/// individual flags.
fn build_config(kind: StudyKind, args: &StudyArgs) -> Result<Study64, CliError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let cfg = read_config(path)?;
            if cfg.study_kind != kind {
                return Err(usage(format!(
                    "config in {} describes a different study kind",
                    path.display()
                )));
            }
            cfg
        }
        None => match kind {
            StudyKind::Profiles => Study64::default_profiles(SourceConfig::Plane),
            StudyKind::VarianceConvergence => Study64::default_variance_convergence(),
            StudyKind::QuantileConvergence => Study64::default_quantile_convergence(),
            StudyKind::MassVsCbar => Study64::default_mass_study(),
        },
    };
    apply_source_flags(
        &mut cfg.source,
        args.source,
        args.half_width,
        args.sigma,
        args.duration,
    )?;
    if args.cbar.is_some() || args.omega1.is_some() {
        let cbar = args.cbar.unwrap_or_else(|| cfg.uncertainty.cbar());
        let omega1 = args.omega1.unwrap_or_else(|| cfg.uncertainty.omega1());
        cfg.uncertainty =
            Uncertain64::new(cbar, omega1).map_err(|e| usage(e.to_string()))?;
    }
    if let Some(t) = &args.t {
        cfg.times = t.clone();
    }
    if let Some(grid) = &args.grid {
        cfg.spatial_grid = grid.clone();
    }
    if let Some(order) = args.order {
        cfg.order = order;
    }
    if let Some(samples) = args.samples {
        cfg.n_samples = samples;
    }
    if let Some(p) = &args.percentiles {
        cfg.percentile_grid = p.clone();
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

/// Reads either a bare study configuration or a run manifest, whose
/// embedded configuration reproduces the original run.
fn read_config(path: &Path) -> Result<Study64, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| usage(format!("{} is not valid JSON: {e}", path.display())))?;
    let parse = |v: &serde_json::Value| {
        serde_json::from_value::<Study64>(v.clone())
            .map_err(|e| usage(format!("{} is not a study configuration: {e}", path.display())))
    };
    match value.get("study") {
        Some(study) => {
            let manifest: Result<RunManifest<f64>, _> = serde_json::from_value(value.clone());
            match manifest {
                Ok(m) => Ok(m.study),
                Err(_) => parse(study),
            }
        }
        None => parse(&value),
    }
}

fn apply_source_flags(
    source: &mut Source64,
    kind: Option<SourceKind>,
    half_width: Option<f64>,
    sigma: Option<f64>,
    duration: Option<f64>,
) -> Result<(), CliError> {
    if let Some(kind) = kind {
        *source = kind.base();
    }
    if let Some(hw) = half_width {
        match source {
            SourceConfig::Square { half_width, .. } => *half_width = hw,
            _ => return Err(usage("--half-width only applies to the square source")),
        }
    }
    if let Some(s) = sigma {
        match source {
            SourceConfig::Gaussian { sigma, .. } => *sigma = s,
            _ => return Err(usage("--sigma only applies to the gaussian source")),
        }
    }
    if let Some(d) = duration {
        match source {
            SourceConfig::Square { duration, .. } | SourceConfig::Gaussian { duration, .. } => {
                *duration = d
            }
            _ => return Err(usage("--duration only applies to distributed sources")),
        }
    }
    Ok(())
}

fn output_dir(args: &StudyArgs) -> PathBuf {
    args.output_dir
        .clone()
        .or_else(|| std::env::var_os("UQTB_OUTPUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

fn file_stem(kind: StudyKind) -> &'static str {
    match kind {
        StudyKind::Profiles => "profiles",
        StudyKind::VarianceConvergence => "variance_convergence",
        StudyKind::QuantileConvergence => "quantile_convergence",
        StudyKind::MassVsCbar => "mass_vs_cbar",
    }
}

/// Writes the CSV and its manifest, removing partial outputs if either
/// write fails.
fn write_outputs(
    kind: StudyKind,
    cfg: &Study64,
    table: &Table64,
    dir: &Path,
) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let stem = file_stem(kind);
    let csv_path = dir.join(format!("{stem}.csv"));
    let json_path = dir.join(format!("{stem}.json"));
    let cleanup = || {
        let _ = fs::remove_file(&csv_path);
        let _ = fs::remove_file(&json_path);
    };
    let manifest = RunManifest {
        study: cfg.clone(),
        output: format!("{stem}.csv"),
        notes: study_notes(kind),
    };
    let mut manifest_text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CliError::Io(format!("cannot encode manifest: {e}")))?;
    manifest_text.push('\n');
    let result = fs::write(&csv_path, table.to_csv())
        .and_then(|()| fs::write(&json_path, manifest_text));
    if let Err(e) = result {
        cleanup();
        return Err(CliError::Io(format!("cannot write outputs in {}: {e}", dir.display())));
    }
    println!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

fn run_eval(args: &EvalArgs) -> Result<(), CliError> {
    let mut source = args.source.base();
    apply_source_flags(&mut source, None, args.half_width, args.sigma, args.duration)?;
    source.validate().map_err(|e| usage(e.to_string()))?;
    if !args.x.is_finite() {
        return Err(usage("--x must be finite"));
    }
    if source.is_radial() && args.x < 0.0 {
        return Err(usage("--x is a radius for this source and must be non-negative"));
    }
    if !args.t.is_finite() || args.t <= 0.0 {
        return Err(usage("--t must be positive"));
    }
    if !args.c.is_finite() || args.c < 0.0 {
        return Err(usage("--c must be a non-negative scattering ratio"));
    }
    let flux = sources::source_flux(&source, args.x, args.t, args.c)
        .map_err(CliError::Numeric)?;
    let mut out = String::new();
    let _ = writeln!(out, "uncollided = {:.16e}", flux.uncollided);
    let _ = writeln!(out, "collided   = {:.16e}", flux.collided);
    let _ = writeln!(out, "total      = {:.16e}", flux.total());
    print!("{out}");
    Ok(())
}
