use thiserror::Error;

/// Errors raised by the geometry, solver and analysis routines.
#[derive(Debug, Error)]
pub enum QcError {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("beltrami iteration did not converge after {iterations} iterations (last residual {last_residual:.3e})")]
    Convergence {
        iterations: usize,
        last_residual: f64,
        residuals: Vec<f64>,
    },

    #[error("linear solver stalled at relative residual {relative_residual:.3e} after {iterations} iterations")]
    LinearSolve {
        iterations: usize,
        relative_residual: f64,
    },

    #[error("boundary trace quality: {0}")]
    TraceQuality(String),

    #[error("extrapolation did not converge: sequence {sequence:?}")]
    Extrapolation { sequence: Vec<f64> },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("degenerate ratio: {0}")]
    Degenerate(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, QcError>;

pub(crate) fn arg(msg: impl Into<String>) -> QcError {
    QcError::Argument(msg.into())
}
