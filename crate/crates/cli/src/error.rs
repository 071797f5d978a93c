use std::path::{Path, PathBuf};

use thiserror::Error;

/// Failures of the command-line layer, each mapped to an exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid input:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),

    #[error(transparent)]
    Model(#[from] farezone_core::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 2 for bad input, 3 for solver failures, 1 for IO.
    pub fn exit_code(&self) -> u8 {
        use farezone_core::Error as E;
        match self {
            CliError::Validation(_) => 2,
            CliError::Model(E::Domain { .. } | E::InvalidParameter { .. } | E::EmptyGrid) => 2,
            CliError::Model(_) => 3,
            CliError::Io { .. } => 1,
        }
    }
}
