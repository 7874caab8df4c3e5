use thiserror::Error;

/// Errors raised anywhere in the link simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("framing error: {0}")]
    Framing(String),

    #[error("capacity error: target of {target} bits exceeds achievable maximum of {achievable}")]
    Capacity { target: usize, achievable: usize },

    #[error("synchronization failure: correlation peak {peak:.3} below 0.5")]
    Sync { peak: f64 },

    #[error("equalizer diverged: {0}")]
    Divergence(String),

    #[error("measurement error: {0}")]
    Measurement(String),

    #[error("no crossing: {0}")]
    NoCrossing(String),

    #[error("estimation error: {0}")]
    Estimation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn framing(msg: impl Into<String>) -> Self {
        Error::Framing(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
