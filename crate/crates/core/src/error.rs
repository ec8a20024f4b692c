use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("{context}: invalid JSON: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("ontology: {0}")]
    Ontology(String),

    #[error("template for {event_type}: {reason}")]
    Template { event_type: String, reason: String },

    #[error("corpus line {line} ({doc_id}/{sent_id}): {reason}")]
    Corpus {
        line: usize,
        doc_id: String,
        sent_id: String,
        reason: String,
    },

    #[error("invalid query trigger span [{start},{end}) for a sentence of {len} tokens")]
    InvalidTrigger { start: usize, end: usize, len: usize },

    #[error("unknown event type {0:?}")]
    UnknownEventType(String),

    #[error("{0}")]
    Config(String),

    #[error("generator: {0}")]
    Generator(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }
}
