use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("invalid symbol {0:?}: {1}")]
    InvalidSymbol(String, &'static str),

    #[error("merge table line {line}: {message}")]
    TableFormat { line: usize, message: String },

    #[error("segmented text ends with a dangling continuation marker")]
    DanglingContinuation,

    #[error("{what}: {left} lines vs {right} lines")]
    LineCountMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("invalid length bins: {0}")]
    InvalidBins(String),

    #[error("target size {target} exceeds the {total} available sentence pairs")]
    TargetTooLarge { target: u64, total: u64 },

    #[error("bin {bin} cannot supply {quota} pairs, only {available} available")]
    InfeasibleQuota {
        bin: String,
        quota: u64,
        available: u64,
    },

    #[error("no sentence statistics to aggregate")]
    EmptyStats,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("duplicate NMO value {0} in grid")]
    DuplicateNmo(u32),

    #[error("cannot parse NMO value {0:?}")]
    InvalidNmo(String),

    #[error("insufficient results for a tier report: {0}")]
    InsufficientCoverage(String),

    #[error("experiment config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("path does not exist: {}", .0.display())]
    MissingPath(PathBuf),

    #[error("backend failed: {0}")]
    Backend(String),

    #[error("results file line {line}: {message}")]
    ResultsFormat { line: usize, message: String },

    #[error("no completed run records")]
    NoCompletedRecords,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
