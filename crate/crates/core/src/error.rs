use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A bin of the equivalent spectrum fell below the singularity guard.
    #[error("equivalent spectrum is singular at bin {bin} (|B(k)| = {magnitude:e})")]
    SpectrumSingular { bin: usize, magnitude: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
