use thiserror::Error;

/// Errors raised by the numerical modules.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter violates an operation's precondition.
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A moment was requested on a density whose integral vanishes.
    #[error("density normalization is zero (|∫ψ| = {magnitude:e})")]
    ZeroNormalization { magnitude: f64 },

    /// The companion-matrix eigenvalue iteration did not converge.
    #[error("root finder did not converge for polynomial of degree {degree} after {iterations} iterations")]
    RootFinding { degree: usize, iterations: usize },

    /// The dispersion relation admits growing modes.
    #[error("dispersion has Re E = {re_e:e} > 0 at k = {k:?}; evolution would be unbounded")]
    UnboundedDispersion { k: Vec<f64>, re_e: f64 },

    /// A dispersion relation is not uniquely determined at some wavenumber.
    #[error("dispersion is not unique at k = {k:?} ({status})")]
    NonUniqueDispersion { k: Vec<f64>, status: String },

    /// An adaptive quadrature failed to reach its tolerance.
    #[error("quadrature did not converge in {context}: estimated error {error:e}")]
    Quadrature { context: &'static str, error: f64 },

    /// A value lies outside the domain an operation supports.
    #[error("{0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
