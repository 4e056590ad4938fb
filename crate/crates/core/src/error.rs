use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("invalid Schatten index {0}: need q >= 1 or q = inf")]
    InvalidSchattenIndex(f64),

    #[error("operator entries must be finite")]
    NonFinite,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("axis {axis} out of range for n = {n}")]
    AxisOutOfRange { axis: usize, n: usize },

    #[error("generator index {index} out of range for {m} generators")]
    WordIndexOutOfRange { index: usize, m: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("{0}")]
    InvalidArgument(String),

    #[error("linear algebra failure: {0}")]
    Linalg(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn invalid(msg: impl Into<String>) -> LabError {
    LabError::InvalidArgument(msg.into())
}
