use std::path::Path;

use thiserror::Error;

/// Errors raised anywhere in the extraction → embedding → classification pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A file was readable but its content is wrong. `line` is 1-based; 0 means
    /// the problem is not tied to one line.
    #[error("{path}:{line}: {message}")]
    Load { path: String, line: usize, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("model file: {0}")]
    Model(String),

    #[error("no cached embedding for record {record_id:?} mention {mention_id}")]
    CacheMiss { record_id: String, mention_id: usize },

    #[error("embedding transport error: {0}")]
    Transport(String),

    #[error("embedding protocol error: {0}")]
    Protocol(String),

    #[error("embedding provider answered {status}: {body}")]
    Provider { status: u16, body: String },

    #[error("record {record_id:?}: {source}")]
    Record {
        record_id: String,
        #[source]
        source: Box<Error>,
    },

    #[error("mention {mention_id} ({surface:?}): {source}")]
    Mention {
        mention_id: usize,
        surface: String,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn load(path: &Path, line: usize, message: impl Into<String>) -> Self {
        Error::Load {
            path: path.display().to_string(),
            line,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
