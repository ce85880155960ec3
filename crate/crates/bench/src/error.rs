use std::io;
use std::path::PathBuf;

use dpshare_core::Error as CoreError;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, BenchError>;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{0}")]
    Input(String),
    #[error("dataset `{name}` not found at {}", path.display())]
    MissingDataset { name: String, path: PathBuf },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl BenchError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        BenchError::Io { path: path.into(), source }
    }

    /// 2 for anything the caller can fix by changing the input, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            BenchError::Input(_)
            | BenchError::MissingDataset { .. }
            | BenchError::Toml(_)
            | BenchError::Json(_) => 2,
            BenchError::Io { source, .. } if source.kind() == io::ErrorKind::NotFound => 2,
            BenchError::Io { .. } | BenchError::Csv(_) => 1,
            BenchError::Core(e) => match e {
                CoreError::Parse { .. }
                | CoreError::Schema(_)
                | CoreError::Ingestion(_)
                | CoreError::Encoding(_)
                | CoreError::EncodingRequired { .. }
                | CoreError::Split(_)
                | CoreError::Partition(_)
                | CoreError::Config(_)
                | CoreError::GridMismatch(_)
                | CoreError::SchemaIncompatible(_)
                | CoreError::Artifact(_)
                | CoreError::Json(_)
                | CoreError::Csv(_) => 2,
                CoreError::Io(io) if io.kind() == io::ErrorKind::NotFound => 2,
                _ => 1,
            },
        }
    }
}
