use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: duplicate tweet id {id}")]
    DuplicateTweet { line: usize, id: String },

    #[error("duplicate tweet id {0} in stream")]
    DuplicateStreamId(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("query is empty")]
    EmptyQuery,

    #[error("corpus has no tokens")]
    EmptyCorpus,

    #[error("invalid term vector: {0}")]
    InvalidTermVector(String),

    #[error("corrupt reference model at {path}: {reason}")]
    CorruptModel { path: PathBuf, reason: String },

    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: String,
        reason: &'static str,
    },

    #[error("line {line}: invalid relevance label {label:?}")]
    InvalidLabel { line: usize, label: String },

    #[error("inconsistent ground truth: {0}")]
    Inconsistent(String),

    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),

    #[error("cannot start worker pool: {0}")]
    ThreadPool(String),

    #[error("synthetic stream would contain zero tweets")]
    EmptySynthetic,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn param(name: &'static str, value: impl ToString, reason: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value: value.to_string(),
            reason,
        }
    }
}
