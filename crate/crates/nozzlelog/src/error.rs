use std::io;
use std::path::PathBuf;

/// Errors surfaced by the command-line driver.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}:{line}: {msg}", path.display())]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] nozzlelog_core::Error),
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        CliError::Parse {
            path: path.into(),
            line,
            msg: msg.into(),
        }
    }

    /// Process exit code: 2 for bad input or configuration, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use nozzlelog_core::Error as E;
        match self {
            CliError::Io { .. } | CliError::Parse { .. } | CliError::Usage(_) => 2,
            CliError::Core(e) => match e {
                E::Fit(_) | E::Domain(_) | E::Generation(_) | E::Selector(_) => 1,
                _ => 2,
            },
        }
    }
}
