//! Error types shared across the library.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SketchError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error(
        "direction is degenerate: residual norm {residual:.3e} below threshold {threshold:.3e}"
    )]
    DegenerateDirection { residual: f64, threshold: f64 },

    #[error(
        "power iteration failed to converge after {iters} iterations (residual {residual:.3e})"
    )]
    NoConvergence { iters: usize, residual: f64 },

    #[error("quadrature did not reach tolerance after {subdivisions} subdivisions")]
    QuadratureFailure { subdivisions: usize },

    #[error("oracle calibration failed: {0}")]
    Calibration(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("oracle error: {0}")]
    Oracle(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SketchError>;
