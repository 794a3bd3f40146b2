use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("feature `{0}` has zero variance")]
    ZeroVariance(String),

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("expected {expected} values, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("unknown category `{value}` for column `{column}`")]
    UnknownCategory { column: String, value: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{path}: {cause}")]
    Io { path: PathBuf, cause: std::io::Error },

    #[error("unsupported model version {found} (expected {expected})")]
    SchemaVersionMismatch { expected: u32, found: u32 },

    #[error("corrupt model: {0}")]
    CorruptModel(String),

    #[error("impurity of an empty node is undefined")]
    EmptyNode,

    #[error("need at least 2 rows to fit statistics, got {0}")]
    TooFewRows(usize),

    #[error("cannot train on an empty dataset")]
    EmptyDataset,

    #[error("test set contains a single class")]
    DegenerateLabels,

    #[error("instance is already predicted positive")]
    NotNegative,

    #[error("search space too large: {paths} positive paths (limit {limit})")]
    TooLarge { paths: usize, limit: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("degenerate ranking: {0}")]
    DegenerateRanking(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, cause: std::io::Error) -> Self {
        Error::Io { path: path.into(), cause }
    }
}
