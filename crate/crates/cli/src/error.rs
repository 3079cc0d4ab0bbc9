use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("numerical failure in {context}: {source}")]
    Numerical {
        context: &'static str,
        #[source]
        source: emergent_core::Error,
    },

    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{failed} of {total} invariant checks failed")]
    Invariant { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical { .. } | CliError::Io { .. } => 1,
            CliError::Invariant { .. } => 3,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Attaches a module name to a core error.
pub trait Context<T> {
    fn context(self, context: &'static str) -> CliResult<T>;
}

impl<T> Context<T> for emergent_core::Result<T> {
    fn context(self, context: &'static str) -> CliResult<T> {
        self.map_err(|source| CliError::Numerical { context, source })
    }
}
