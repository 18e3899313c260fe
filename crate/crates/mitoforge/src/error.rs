use std::path::{Path, PathBuf};

use mitoforge_core::Error as CoreError;

/// Process exit codes. Stable across releases.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INVALID: i32 = 1;
    pub const IO: i32 = 2;
    pub const CHECK_FAILED: i32 = 3;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("gradient check failed: max relative error {0:e} exceeds {1:e}")]
    Gradcheck(f64, f64),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Core(_) | Self::Invalid(_) => exit::INVALID,
            Self::Io { .. } | Self::Image { .. } => exit::IO,
            Self::Csv { source, .. } => match source.kind() {
                csv::ErrorKind::Io(_) => exit::IO,
                _ => exit::INVALID,
            },
            Self::Json { source, .. } => {
                if source.is_io() {
                    exit::IO
                } else {
                    exit::INVALID
                }
            }
            Self::Gradcheck(..) => exit::CHECK_FAILED,
        }
    }
}

macro_rules! invalid {
    ($($arg:tt)*) => {
        $crate::error::CliError::Invalid(format!($($arg)*))
    };
}
pub(crate) use invalid;

pub type Result<T> = std::result::Result<T, CliError>;
