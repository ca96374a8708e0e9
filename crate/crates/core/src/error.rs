//! Error type shared by all modules.

use thiserror::Error;

/// Library-wide error type.
///
/// The variants map onto the CLI exit-code contract: `Config` -> 2,
/// `Data` -> 3, `Numerical` -> 4.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid configuration or argument values.
    #[error("config error: {0}")]
    Config(String),

    /// Missing, malformed, or insufficient input data.
    #[error("data error: {0}")]
    Data(String),

    /// Numerical failure (divergence, singular system, non-finite value).
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
