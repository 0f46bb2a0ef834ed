//! Error types shared across the crate.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by model construction, penalties, the solver and the
/// certificate engine.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller-supplied argument violates a documented precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Matrix/vector shapes do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A combinatorial scan would exceed the configured subset cap.
    #[error(
        "enumeration cap exceeded: C({n},{k}) = {subsets} subsets over cap {cap}; \
         rerun with --force or a larger cap"
    )]
    EnumerationCap { n: usize, k: usize, subsets: u128, cap: u64 },

    /// The iteration produced non-finite values; the objective trace up to
    /// the failure is preserved for diagnostics.
    #[error("solver diverged after {iterations} iterations (non-finite iterate or objective)")]
    Diverged { iterations: usize, trace: Vec<f64> },

    #[error("numerical factorization failed: {0}")]
    Numerical(String),

    #[error("malformed input file {path}: {reason}")]
    Parse { path: String, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }
}
