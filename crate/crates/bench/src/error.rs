use std::path::PathBuf;

/// Harness failures, each mapped to a process exit code.
#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Core(#[from] iterl2norm::Error),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("{path}:{line}: {msg}")]
    Data { path: PathBuf, line: usize, msg: String },

    #[error("{0}: {1}")]
    Io(PathBuf, #[source] std::io::Error),

    #[error("config {0}: {1}")]
    Config(PathBuf, String),
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_RANGE: i32 = 4;

impl BenchError {
    pub fn exit_code(&self) -> i32 {
        use iterl2norm::Error as E;
        match self {
            BenchError::Usage(_) | BenchError::Config(..) => EXIT_USAGE,
            BenchError::Core(E::Usage(_)) => EXIT_USAGE,
            BenchError::Core(E::Range(_)) => EXIT_RANGE,
            BenchError::Core(_) | BenchError::Data { .. } | BenchError::Io(..) => EXIT_DATA,
        }
    }

    pub(crate) fn data(path: &std::path::Path, line: usize, msg: impl Into<String>) -> Self {
        BenchError::Data { path: path.to_path_buf(), line, msg: msg.into() }
    }
}
