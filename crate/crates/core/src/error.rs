//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by grid construction, operator application, model
/// evaluation, scenario parsing and file I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size {0} must be a power of two and at least 8")]
    InvalidGrid(usize),

    #[error("field length {got} does not match grid size {want}")]
    LengthMismatch { got: usize, want: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("diffusion order alpha={0} outside (0, 2]")]
    InvalidAlpha(f64),

    #[error("negative density argument s={0}")]
    NegativeDensity(f64),

    #[error("invalid semilinearity parameter: {0}")]
    InvalidSemilinearity(String),

    #[error("quadrature did not converge: achieved {achieved:.3e}, requested {requested:.3e}")]
    QuadratureDiverged { achieved: f64, requested: f64 },

    #[error("antiderivative undefined: {0}")]
    AntiderivativeUndefined(String),

    #[error("no ceiling guaranteed: {0}")]
    NoCeiling(String),

    #[error("entropy undefined: min value {0:.3e} below tolerance")]
    EntropyUndefined(f64),

    #[error("scenario schema error: {0}")]
    Schema(String),

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
