use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {field}: {reason}")]
    Validation { field: &'static str, reason: String },

    #[error("file not found: {0}")]
    MissingFile(PathBuf),

    #[error("column `{column}` not present in {path}")]
    MissingColumn { column: String, path: PathBuf },

    #[error("no usable rows in {path} ({dropped} dropped)")]
    NoRows { path: PathBuf, dropped: usize },

    #[error("{0} is empty")]
    Empty(&'static str),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error("partition `{0}` would contain no rows")]
    EmptyPartition(&'static str),

    #[error("design matrix is rank deficient; dependent column(s): {}", .columns.join(", "))]
    RankDeficient { columns: Vec<String> },

    #[error("argument {value} outside the open domain {domain}")]
    Domain { value: f64, domain: &'static str },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("model file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn validation(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Validation {
            field,
            reason: reason.into(),
        }
    }
}
