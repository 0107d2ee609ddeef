use thiserror::Error;

/// Errors raised across the workbench.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("degenerate determinant {det:e} (|det| must exceed {eps:e})")]
    DegenerateDeterminant { det: f64, eps: f64 },

    #[error("invalid generator token: {0}")]
    InvalidToken(String),

    #[error("bad grid configuration: {0}")]
    BadGridConfig(String),

    #[error("functions are sampled on different grids")]
    GridMismatch,

    #[error("{clipped} of {total} nodes fall on the pole of a + x b")]
    PoleOnGrid { clipped: usize, total: usize },

    #[error("element is not upper triangular (b = {0:e})")]
    NotUpperTriangular(f64),

    #[error("element is not diagonal")]
    NotDiagonal,

    #[error("dilation factor must be nonzero")]
    ZeroDilation,

    #[error("denominator {0:e} too small for a Pitt ratio")]
    DegenerateDenominator(f64),

    #[error("domain error: {0}")]
    DomainError(String),

    #[error("orbit Gram matrix is ill conditioned (cond estimate {0:e})")]
    IllConditionedOrbit(f64),

    #[error("unknown suite `{0}`")]
    UnknownSuite(String),

    #[error("configuration error: {0}")]
    ConfigError(String),

    #[error("csv error: {0}")]
    Csv(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
