use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Library(#[from] wscs_rdf::Error),
    #[error("cannot write {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// Process exit code: 2 for bad input, 3 for numerical failures, 4 for I/O.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Library(wscs_rdf::Error::Config(_) | wscs_rdf::Error::Domain(_)) => 2,
            CliError::Library(_) => 3,
            CliError::Io { .. } => 4,
        }
    }
}
