use thiserror::Error;

/// Errors produced by the core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid {nx}x{ny} is too small (each side needs at least {min} cells)")]
    GridTooSmall { nx: usize, ny: usize, min: usize },
    #[error("grid mismatch: {0}x{1} vs {2}x{3}")]
    GridMismatch(usize, usize, usize, usize),
    #[error("set must be neither empty nor full")]
    ImproperSet,
    #[error("set is empty")]
    EmptySet,
    #[error("circular mean is degenerate (resultant length {0:e})")]
    DegenerateMean(f64),
    #[error("non-finite value at cell ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("too few boundary points for a curvature fit ({0} < 8)")]
    TooFewBoundaryCells(usize),
    #[error("too few usable samples for a rate fit ({0} < 4)")]
    TooFewSamples(usize),
    #[error("deformation leaves the tubular neighbourhood: {0}")]
    Embedding(String),
    #[error("internal solver error: {0}")]
    Internal(String),
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
