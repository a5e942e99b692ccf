//! Error types shared across the crate.

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid construction parameters (names the offending field).
    #[error("configuration error: {0}")]
    Config(String),

    /// Caller misuse: mismatched grids, empty inputs, malformed files.
    #[error("usage error: {0}")]
    Usage(String),

    /// Input outside the mathematical domain of an operation
    /// (e.g. requesting a minimizer at or above the existence threshold).
    #[error("domain error: {0}")]
    Domain(String),

    /// Breakdown inside a numerical routine (non-finite value, failed
    /// linear solve, no bracket, eigensolver failure).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Iteration budget exhausted before reaching tolerance; carries the
    /// last residual so callers can judge how far the solve got.
    #[error("did not converge: {context} (residual {residual:.3e} after {iterations} iterations)")]
    NonConverged {
        context: String,
        residual: f64,
        iterations: usize,
    },

    /// A post-solve verification check failed beyond its tolerance.
    #[error("verification failed: {0}")]
    Verification(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// CLI exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Usage(_) | Error::Domain(_) => 1,
            Error::Numerical(_) | Error::NonConverged { .. } => 2,
            Error::Verification(_) => 3,
            Error::Io(_) | Error::Serde(_) => 1,
        }
    }
}
