use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("{source_name}:{line}: {what} id {id} out of range (limit {limit})")]
    Range {
        source_name: String,
        line: usize,
        what: &'static str,
        id: u64,
        limit: usize,
    },

    #[error("{source_name}:{line}: self-loop {id} -> {id} rejected")]
    SelfLoop {
        source_name: String,
        line: usize,
        id: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: String, expected: String },

    #[error("internal consistency error: {0}")]
    Consistency(String),

    #[error("topic model training failed: {0}")]
    Training(String),

    #[error("objective diverged at iteration {iteration} (value {value})")]
    Divergence { iteration: usize, value: f64 },

    #[error("statistic unavailable: {0}")]
    Stat(String),

    #[error("{0}")]
    MissingInference(String),

    #[error("pipeline stage `{stage}` failed: {cause}")]
    Stage { stage: &'static str, cause: Box<Error> },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn parse(source_name: &str, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.to_string(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn format(message: impl Into<String>) -> Self {
        Error::Format(message.into())
    }

    pub(crate) fn config(message: impl Into<String>) -> Self {
        Error::Config(message.into())
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            cause: Box::new(self),
        }
    }
}

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
    let path = path.into();
    move |source| Error::Io { path, source }
}
