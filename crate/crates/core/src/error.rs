use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),

    #[error("label column `{0}` not found in header")]
    MissingLabelColumn(String),

    #[error("non-numeric value `{value}` at row {row}, column `{column}`")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },

    #[error("non-finite value at row {row}, column `{column}`")]
    NonFinite { row: usize, column: String },

    #[error("unrecognised label `{value}` at row {row} (expected `{stable}` or `{unstable}`)")]
    BadLabel {
        row: usize,
        value: String,
        stable: String,
        unstable: String,
    },

    #[error("single-class dataset")]
    SingleClass,

    #[error("class {class} has {count} samples, need at least {needed}")]
    ClassTooSmall {
        class: &'static str,
        count: usize,
        needed: usize,
    },

    #[error("duplicate feature name `{0}`")]
    DuplicateFeature(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("unknown feature `{name}`; valid names: {valid}")]
    UnknownFeature { name: String, valid: String },

    #[error("principal components undefined: every feature is constant")]
    DegenerateData,

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Error {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Whether the error stems from a bad flag value rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::InvalidParameter(_)
            | Error::UnknownFeature { .. }
            | Error::MissingLabelColumn(_) => true,
            Error::Context { source, .. } => source.is_validation(),
            _ => false,
        }
    }
}
