use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("ingestion error: {0}")]
    Ingestion(String),
    #[error("encoding error: {0}")]
    Encoding(String),
    #[error("split error: {0}")]
    Split(String),
    #[error("partition error: {0}")]
    Partition(String),
    #[error("integrity error: {0}")]
    Integrity(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("cell (row {row}, column {column}) is not numerically encoded")]
    EncodingRequired { row: usize, column: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("degenerate training set: {0}")]
    DegenerateTraining(String),
    #[error("class {0} has no training rows")]
    ClassAbsent(usize),
    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Divergence { epoch: usize },
    #[error("row width {found} does not match the expected {expected}")]
    WidthMismatch { expected: usize, found: usize },
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
    #[error("label {label} is out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },
    #[error("empty test set")]
    EmptyTestSet,
    #[error("undefined test: {0}")]
    UndefinedTest(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("incompatible schemas: {0}")]
    SchemaIncompatible(String),
    #[error("service unavailable: {0}")]
    ServiceUnavailable(String),
    #[error("model artifact error: {0}")]
    Artifact(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
