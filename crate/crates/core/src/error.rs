use std::io;

use thiserror::Error;

/// Errors raised anywhere in the pipeline.
///
/// Variants are grouped by how a caller is expected to react: data errors
/// point at a bad input file, numeric errors at a diverged optimizer, and
/// config errors at a bad invocation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },

    #[error("parse error in document {pmid} at line {line}: {msg}")]
    Parse {
        pmid: String,
        line: usize,
        msg: String,
    },

    #[error("format error at line {line}: {msg}")]
    Format { line: usize, msg: String },

    #[error("overlapping mentions {first:?} and {second:?}")]
    OverlappingMentions {
        first: (usize, usize),
        second: (usize, usize),
    },

    #[error("unknown identifier {0}")]
    UnknownId(String),

    #[error("cannot corrupt triple {0}: every candidate replacement is a stored triple")]
    CorruptionImpossible(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),

    #[error("missing artifact {path}; run the `{stage}` stage first")]
    MissingArtifact { path: String, stage: &'static str },
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(line: usize, msg: impl Into<String>) -> Self {
        Error::Format {
            line,
            msg: msg.into(),
        }
    }

    /// Process exit status for this error: 1 usage/config, 2 data, 3 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 1,
            Error::NonFinite(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
