use thiserror::Error;

/// Crate-wide error type.
///
/// Numerical failures carry enough context to tell a caller *which*
/// quadrature or probe failed; diagnostic payloads are `f64` regardless of
/// the working scalar.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration (source, study, uncertainty model) is inconsistent.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Adaptive quadrature hit its panel budget before reaching tolerance.
    #[error(
        "quadrature did not converge in {context}: residual {achieved:.3e} \
         above tolerance {required:.3e} after {panels} panels"
    )]
    NonConvergence {
        context: &'static str,
        achieved: f64,
        required: f64,
        panels: usize,
    },

    /// The flux was not strictly increasing in the scattering ratio, so the
    /// quantile shortcut does not apply.
    #[error(
        "flux is not strictly increasing in c: phi({c_lo}) = {f_lo:.6e} \
         versus phi({c_hi}) = {f_hi:.6e}"
    )]
    NotMonotonic {
        c_lo: f64,
        f_lo: f64,
        c_hi: f64,
        f_hi: f64,
    },

    /// A study failed at an identifiable point of its sweep.
    #[error("at study point (coordinate {coord}, time {time}): {source}")]
    AtPoint {
        coord: f64,
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
