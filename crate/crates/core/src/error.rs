use std::path::PathBuf;

use thiserror::Error;

/// Broad class of a failure, used by the command-line driver to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-stationary specification: {0}")]
    NonStationary(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("feature layout mismatch at dataset {index}: {detail}")]
    LayoutMismatch { index: usize, detail: String },

    #[error("feature extraction failed for {} series (first: series {}: {})", .0.len(), .0[0].0, .0[0].1)]
    SeriesFailures(Vec<(usize, Box<Error>)>),

    #[error("rejection sampler gave up after {attempts} attempts")]
    RejectionLimit { attempts: u64 },

    #[error("unsupported model file: {0}")]
    ModelVersion(String),

    #[error("model file truncated: needed {needed} bytes at offset {offset}")]
    ModelTruncated { offset: usize, needed: usize },

    #[error("model checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    ModelChecksum { stored: u32, computed: u32 },

    #[error("{path}: row {row}, column {column}: {detail}")]
    Cell {
        path: PathBuf,
        row: usize,
        column: String,
        detail: String,
    },

    #[error("{path}: {detail}")]
    Malformed { path: PathBuf, detail: String },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("stage `{stage}` failed on dataset {index}: {source}")]
    Stage {
        stage: &'static str,
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn at_stage(self, stage: &'static str, index: usize) -> Error {
        Error::Stage {
            stage,
            index,
            source: Box::new(self),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidParameter(_) | Error::Config(_) | Error::Json(_) => ErrorClass::Config,
            Error::NonStationary(_) | Error::Numeric(_) | Error::RejectionLimit { .. } => {
                ErrorClass::Numeric
            }
            Error::Stage { source, .. } => source.class(),
            Error::SeriesFailures(list) => list[0].1.class(),
            _ => ErrorClass::Data,
        }
    }
}
