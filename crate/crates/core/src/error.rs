use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("manifest {path} line {line}: {message}")]
    Manifest {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("table {table}: row {row}: {message}")]
    TableRow {
        table: String,
        row: usize,
        message: String,
    },

    #[error("table {table}: {message}")]
    InvalidTable { table: String, message: String },

    #[error("empty corpus: {0}")]
    EmptyCorpus(String),

    #[error("invalid label vocabulary: {0}")]
    Vocabulary(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("dimension mismatch: expected {expected}, got {actual} ({what})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("tokenizer fingerprint mismatch: model {model:#018x}, input {input:#018x}")]
    FingerprintMismatch { model: u64, input: u64 },

    #[error("label id {label} out of range for vocabulary of {size}")]
    LabelOutOfRange { label: usize, size: usize },

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("training diverged at epoch {epoch}, table {table}: loss {loss}")]
    Diverged {
        epoch: usize,
        table: String,
        loss: f64,
    },

    #[error("true label leaked into training context of table {table}, column {column}")]
    Leakage { table: String, column: usize },

    #[error("{0}")]
    Mismatch(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
