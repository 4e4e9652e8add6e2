use std::path::PathBuf;

use gtf_core::GtfError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    File { path: PathBuf, source: GtfError },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] GtfError),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    /// 2 for solver trouble, 1 for everything the input is to blame for.
    pub fn exit_code(&self) -> u8 {
        let core = match self {
            CliError::File { source, .. } | CliError::Core(source) => source,
            CliError::Usage(_) => return 1,
        };
        match core {
            GtfError::MaxIterationsExceeded { .. } | GtfError::IllConditioned(_) => 2,
            GtfError::ClassSolve { source, .. } => match **source {
                GtfError::MaxIterationsExceeded { .. } | GtfError::IllConditioned(_) => 2,
                _ => 1,
            },
            _ => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
