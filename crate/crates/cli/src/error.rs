use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: muxtomo_core::Error,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("manifest: {0}")]
    Manifest(String),
}

impl CliError {
    /// 2 for bad input, 3 when the numbers violate a precondition.
    pub fn exit_code(&self) -> i32 {
        use muxtomo_core::Error as E;
        match self {
            CliError::Core { source, .. } => match source {
                E::Saturation { .. } | E::Truncation { .. } | E::Range(_) | E::FitDivergence { .. } => 3,
                _ => 2,
            },
            CliError::Io { .. } | CliError::Manifest(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub trait Context<T> {
    fn context(self, what: impl Into<String>) -> Result<T>;
}

impl<T> Context<T> for muxtomo_core::Result<T> {
    fn context(self, what: impl Into<String>) -> Result<T> {
        self.map_err(|source| CliError::Core {
            context: what.into(),
            source,
        })
    }
}

pub fn read(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}
