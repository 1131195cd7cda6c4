use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("length mismatch: expected {expected} samples, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("gauge not invertible at this amplitude: min |1+V| = {min_modulus:.3e} (need > {threshold})")]
    GaugeNotInvertible { min_modulus: f64, threshold: f64 },

    #[error("time step dt = {dt:.3e} exceeds the probed stability bound {bound:.3e}")]
    StepTooLarge { dt: f64, bound: f64 },

    #[error("numerical failure at step {step} (t = {time:.6}): {reason}")]
    NumericalFailure { step: usize, time: f64, reason: String },

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed snapshot: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
