use std::io;

use thiserror::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_ENGINE: u8 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] audio_transport::Error),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
    #[error("cannot open audio output {0:?} (supported: null, wav:<path>)")]
    Device(String),
    #[error("audio output: {0}")]
    Sink(#[from] hound::Error),
}

impl CliError {
    pub fn io(context: impl Into<String>, source: io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    /// Process exit status: 2 for bad arguments, 3 for anything touching
    /// files, sockets or devices, 4 when the engine itself fails.
    pub fn exit_code(&self) -> u8 {
        use audio_transport::Error as E;
        match self {
            CliError::Usage(_) | CliError::Core(E::InvalidArgument(_)) => EXIT_USAGE,
            CliError::Core(E::EngineFault { .. }) => EXIT_ENGINE,
            CliError::Core(_) | CliError::Io { .. } | CliError::Device(_) | CliError::Sink(_) => {
                EXIT_IO
            }
        }
    }
}
