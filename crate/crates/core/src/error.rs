use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("source exhausted: requested {requested} symbols, only {available} available")]
    SourceExhausted { requested: u64, available: u64 },

    #[error("invalid character {found:?} at byte {offset} of sequence file")]
    InvalidSymbol { found: char, offset: usize },

    #[error("request too large: {0}")]
    TooLarge(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
