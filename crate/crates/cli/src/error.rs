use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Model(#[from] fairmix_core::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// 1 for failed checks and runs, 2 for bad configuration or parameters,
    /// 3 for I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Failed(_) | CliError::Model(fairmix_core::Error::Diverged { .. }) => 1,
            CliError::Config(_) | CliError::Model(_) => 2,
            CliError::Io { .. } => 3,
        }
    }
}
