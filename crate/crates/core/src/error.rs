use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid field profile: {0}")]
    InvalidProfile(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("lattice of {n} sites exceeds the configured maximum of {max}")]
    TooLarge { n: usize, max: usize },

    #[error("Lanczos did not converge after {iterations} iterations (best residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("site {0} is not in the lattice")]
    SiteOutOfRange(i64),

    #[error("state norm deviates from one by {0:e}")]
    NotNormalized(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("missing Perron data for cluster length {0}")]
    MissingPerronData(usize),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
