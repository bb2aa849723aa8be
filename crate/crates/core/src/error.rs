use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("triplet #{index} ({row}, {col}) is outside a {n_rows}x{n_cols} matrix")]
    IndexOutOfRange {
        index: usize,
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid constraint menu: {0}")]
    InvalidMenu(String),

    #[error("segment {segment} is empty but is referenced by a similarity constraint")]
    EmptySegment { segment: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("problem too large for the dense oracle: {0}")]
    SizeGuard(String),

    #[error("simplex breakdown: {0}")]
    NumericalBreakdown(String),

    #[error("MPS parse error on line {line}: {message}")]
    Mps { line: usize, message: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
