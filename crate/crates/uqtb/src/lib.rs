//! Uncertainty-quantified benchmark solutions for time-dependent particle
//! transport in an infinite, isotropically scattering medium.
//!
//! The deterministic layer evaluates scalar flux for an isotropic pulse in
//! plane, point, and line geometry, and for distributed (square, gaussian)
//! pulses built from the plane kernel. The stochastic layer treats the
//! scattering ratio `c` as uniformly distributed and propagates it with a
//! Legendre polynomial-chaos expansion, yielding moments, full expansions,
//! and sampled quantiles of the flux, along with closed-form cross-checks
//! for expectations and particle balance.
//!
//! All numerics are generic over the scalar type through [`real::Real`];
//! the `*64` aliases fix `f64`, the precision the default tolerances are
//! tuned for.

// Frozen reference values in tests keep every digit of the high-precision
// computations that produced them, beyond what f64 can represent.
#![allow(clippy::excessive_precision)]

pub mod bench;
pub mod cmplx;
pub mod error;
pub mod kernels;
pub mod legendre;
pub mod pce;
pub mod quad;
pub mod real;
pub mod sources;
pub mod stats;

pub use bench::{RunManifest, StudyConfig, StudyKind, Table};
pub use error::{Error, Result};
pub use kernels::{FluxValue, SimilarityPoint};
pub use pce::{ChaosExpansion, UncertainScatteringRatio};
pub use quad::AdaptiveOpts;
pub use real::Real;
pub use sources::SourceConfig;
pub use stats::QuantileTable;

/// [`SimilarityPoint`] over `f64`.
pub type Point64 = SimilarityPoint<f64>;
/// [`FluxValue`] over `f64`.
pub type Flux64 = FluxValue<f64>;
/// [`SourceConfig`] over `f64`.
pub type Source64 = SourceConfig<f64>;
/// [`UncertainScatteringRatio`] over `f64`.
pub type Uncertain64 = UncertainScatteringRatio<f64>;
/// [`ChaosExpansion`] over `f64`.
pub type Expansion64 = ChaosExpansion<f64>;
/// [`QuantileTable`] over `f64`.
pub type Quantiles64 = QuantileTable<f64>;
/// [`StudyConfig`] over `f64`.
pub type Study64 = StudyConfig<f64>;
/// [`Table`] over `f64`.
pub type Table64 = Table<f64>;
