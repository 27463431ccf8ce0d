use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("sample rate mismatch: {a} Hz vs {b} Hz (resampling is not supported)")]
    SampleRateMismatch { a: u32, b: u32 },

    #[error("unsupported channel layout: {a} vs {b} channels")]
    ChannelMismatch { a: usize, b: usize },

    #[error("envelope line {line}: {reason}")]
    Envelope { line: usize, reason: String },

    #[error("wav: {0}")]
    Wav(#[from] hound::Error),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error("engine fault at hop {hop}: {detail}")]
    EngineFault { hop: u64, detail: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
