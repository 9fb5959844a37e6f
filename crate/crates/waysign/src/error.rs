use std::path::{Path, PathBuf};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] waysign_core::Error),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    /// Malformed input. `context` locates it (file, line, field).
    #[error("{context}: {message}")]
    Format { context: String, message: String },

    #[error("{0}")]
    Usage(String),

    /// The run completed but a quality threshold was not met.
    #[error("{0}")]
    QualityGate(String),
}

impl Error {
    pub fn format(context: impl Into<String>, message: impl ToString) -> Self {
        Error::Format {
            context: context.into(),
            message: message.to_string(),
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 0 ok, 1 usage or invalid input, 2 quality gate, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 3,
            Error::QualityGate(_) | Error::Core(waysign_core::Error::RegistrationFailed { .. }) => 2,
            _ => 1,
        }
    }
}

pub fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}
