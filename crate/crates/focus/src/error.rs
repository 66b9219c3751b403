use std::io;
use std::path::{Path, PathBuf};

/// Process exit status for a failed command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Input = 2,
    Numerical = 3,
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },

    #[error("{}:{line}:{column}: {msg}", path.display())]
    Parse { path: PathBuf, line: usize, column: usize, msg: String },

    #[error("{}: {msg}", path.display())]
    Format { path: PathBuf, msg: String },

    #[error("{}: {source}", path.display())]
    Input { path: PathBuf, source: focus_core::Error },

    #[error(transparent)]
    Core(#[from] focus_core::Error),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("verification failed: {0}")]
    Verify(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: &Path, source: io::Error) -> Self {
        Self::Io { path: path.to_path_buf(), source }
    }

    pub fn format(path: &Path, msg: impl Into<String>) -> Self {
        Self::Format { path: path.to_path_buf(), msg: msg.into() }
    }

    pub fn parse(path: &Path, line: usize, column: usize, msg: impl Into<String>) -> Self {
        Self::Parse { path: path.to_path_buf(), line, column, msg: msg.into() }
    }

    pub fn exit_code(&self) -> ExitCode {
        use focus_core::Error as C;
        match self {
            Self::Verify(_) => ExitCode::Numerical,
            Self::Core(C::NonFiniteOutput(_) | C::SvdFailed | C::NonFinite { .. }) => ExitCode::Numerical,
            _ => ExitCode::Input,
        }
    }
}
