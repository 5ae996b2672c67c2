use thiserror::Error;

/// Errors raised anywhere in the simulation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("singular model: {0}")]
    Singularity(String),

    #[error("noise calibration failed: {0}")]
    Calibration(String),

    #[error("no spectral peak: {0}")]
    NoPeak(String),

    #[error("known symbol X[{k},{m}] has modulus {modulus:e}, below the division guard")]
    DivisionGuard { k: usize, m: usize, modulus: f64 },

    #[error("estimation setup failed: {0}")]
    RankDeficient(String),

    #[error("ill-conditioned least-squares system (condition estimate {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
