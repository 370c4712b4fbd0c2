use thiserror::Error;

/// Errors surfaced by grid construction, transport, calibration and testing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("cardinality mismatch: {left} points vs {right} grid points")]
    CardinalityMismatch { left: usize, right: usize },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("empty sample block")]
    EmptyBlock,

    #[error("matrix is not symmetric positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("covariance factorization failed: smallest eigenvalue {min_eigenvalue:e} vs largest {max_eigenvalue:e}")]
    Factorization { min_eigenvalue: f64, max_eigenvalue: f64 },

    #[error("estimator failed: {0}")]
    Estimation(String),

    #[error("bootstrap replication {replication} failed after {attempts} attempts: {source}")]
    BootstrapAbort {
        replication: usize,
        attempts: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("no critical table entry for key {0}")]
    MissingEntry(String),

    #[error("critical table entry {key} already holds {existing}, refusing to overwrite with {new}")]
    KeyClash { key: String, existing: f64, new: f64 },

    #[error("malformed input at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
