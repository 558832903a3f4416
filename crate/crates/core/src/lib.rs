//! Numerical laboratory for linear diffusion equations with fractional time
//! derivatives.
//!
//! The crate contrasts two classes of linear evolution:
//!
//! * translation-invariant ones, evolved exactly mode by mode through
//!   `(Fψ)(t, k) = (Fψ)(0, k)·exp[t E(k)]`, whose cumulants grow at most
//!   linearly in time, and
//! * the Caputo fractional diffusion equation, whose memory kernel starts at a
//!   fixed base time and whose variance grows like `t^β`.
//!
//! Numerical kernels are generic over [`Real`] (`f32`/`f64`); the `*64`
//! aliases below name the `f64` instantiations used by the CLI and the
//! acceptance suite.

pub mod dispersion;
pub mod error;
pub mod evolution;
pub mod fractional_ops;
pub mod grid;
pub mod io;
pub mod moments;
pub mod numeric;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::{Real, EULER_GAMMA};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type SpatialGrid64 = grid::SpatialGrid<f64>;
pub type DensityField64 = grid::DensityField<f64>;
pub type SpectralField64 = grid::SpectralField<f64>;
pub type FracOrder64 = fractional_ops::FracOrder<f64>;
pub type TimeSignal64 = fractional_ops::TimeSignal<f64>;
pub type DispersionRelation64 = dispersion::DispersionRelation<f64>;
pub type EvolutionResult64 = evolution::EvolutionResult<f64>;
pub type MomentSeries64 = moments::MomentSeries<f64>;
pub type PowerLawFit64 = moments::PowerLawFit<f64>;

pub type SpatialGrid32 = grid::SpatialGrid<f32>;
pub type DensityField32 = grid::DensityField<f32>;
pub type SpectralField32 = grid::SpectralField<f32>;
