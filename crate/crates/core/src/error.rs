use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum CoreError {
    #[error("matrix is empty or has a zero dimension")]
    EmptyMatrix,
    #[error("matrix has zero Frobenius norm")]
    ZeroMatrix,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("invalid rank {rank} for a {n_rows}x{n_cols} matrix")]
    InvalidRank {
        rank: usize,
        n_rows: usize,
        n_cols: usize,
    },
    #[error("requested rank {rank} exceeds min(n_rows, n_cols) = {limit}")]
    RankTooLarge { rank: usize, limit: usize },
    #[error("SVD did not converge after {iterations} sweeps (residual {residual:.3e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        /// Best iterate reached when the budget ran out.
        best: Box<crate::svd::SingularBasis>,
    },
    #[error("no observed entries")]
    EmptyObservation,
    #[error("descriptor is empty")]
    EmptyDescriptor,
    #[error("descriptor index out of range: {index} >= {limit}")]
    IndexOutOfRange { index: usize, limit: usize },
    #[error("duplicate observed entry at ({row}, {col})")]
    DuplicateEntry { row: usize, col: usize },
    #[error("all projections equal; no partition evidence")]
    DegeneratePartition,
    #[error("no submatrix found")]
    NoSubmatrixFound,
    #[error("descriptor complement is empty")]
    EmptyComplement,
    #[error("row split has an empty side")]
    EmptySplit,
    #[error("exact estimator requires a fully observed matrix ({observed} of {total} entries present)")]
    NotFullyObserved { observed: usize, total: usize },
    #[error("plants overlap in rows or columns")]
    OverlapError,
    #[error("pi target must be positive, got {0}")]
    UnachievablePi(f64),
    #[error("observed-matrix residual increased during training at epoch {epoch}: {before} -> {after}")]
    NonMonotoneTraining {
        epoch: usize,
        before: f64,
        after: f64,
    },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error in {path} line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, CoreError>;
