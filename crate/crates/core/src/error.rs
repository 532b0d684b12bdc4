use thiserror::Error;

/// Errors raised by the shrinkage library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error("input violates a contract: {0}")]
    Contract(String),

    /// The matrix recurrence blew up, which almost always means the spectrum
    /// left the approximation interval.
    #[error("chebyshev recurrence diverged (max entry {max_entry:.3e}, bound {bound:.3e}); Λ_max = {lambda_max:.6e} is suspect")]
    Divergence {
        max_entry: f64,
        bound: f64,
        lambda_max: f64,
    },

    #[error("dense decomposition failed: {0}")]
    Decomposition(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
