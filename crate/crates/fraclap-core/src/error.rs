use thiserror::Error;

/// Errors produced by the lattice, weight, form, and solver layers.
#[derive(Debug, Error)]
pub enum FraclapError {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("precision error: {0}")]
    Precision(String),

    #[error("solver did not converge after {iterations} iterations (relative residual {relative_residual:.3e})")]
    Convergence {
        iterations: usize,
        relative_residual: f64,
    },

    #[error("cg stalled after {iterations} iterations (relative residual {relative_residual:.3e}); best iterate attached")]
    CgStalled {
        iterations: usize,
        relative_residual: f64,
        best_iterate: Box<crate::lattice::GridFunction>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, FraclapError>;
