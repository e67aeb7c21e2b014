use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration, flags or mismatched dimensions.
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] srls_core::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 for configuration and dimension errors, 3 for I/O and file format
    /// errors, 4 for solver divergence.
    pub fn exit_code(&self) -> i32 {
        use srls_core::Error as E;
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Core(e) => match e {
                E::InvalidArgument(_) | E::Parse { .. } => 2,
                E::Format { .. } | E::Io { .. } => 3,
                E::Divergence { .. } => 4,
            },
        }
    }
}
