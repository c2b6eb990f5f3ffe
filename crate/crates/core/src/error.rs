use thiserror::Error;

/// Errors produced by the detection library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("regions live on different grids ({0:?} vs {1:?})")]
    MismatchedGrids(Vec<u32>, Vec<u32>),

    #[error("operation requires a nonempty region")]
    EmptyRegion,

    #[error("point {0:?} is out of bounds for grid {1:?}")]
    OutOfBounds(Vec<i32>, Vec<u32>),

    #[error("dimension {0} is not supported here (supported: {1})")]
    UnsupportedDimension(usize, &'static str),

    #[error("invalid grid specification: {0}")]
    InvalidGrid(String),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("{0}")]
    InvalidParameter(String),

    #[error("degenerate scale estimate (MAD is zero); supply sigma2 explicitly")]
    DegenerateScale,

    #[error("field has fewer than {0} valid cells")]
    TooFewCells(usize),

    #[error("problem too large for exhaustive search: {0}")]
    TooLarge(String),

    #[error("infeasible configuration: {0}")]
    Infeasible(String),

    #[error("covariance factorisation failed even with diagonal regularisation")]
    FactorisationFailed,

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
