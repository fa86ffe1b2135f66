use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A record in a line-delimited or tabular input could not be parsed.
    #[error("{source_name}:{line}: {message}")]
    Malformed {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error("duplicate {what}: {key}")]
    Duplicate { what: &'static str, key: String },

    #[error("invalid geometry for {owner}: {message}")]
    Geometry { owner: String, message: String },

    #[error("span ({start}, {end}) out of bounds for document {doc_id} of length {len}")]
    SpanOutOfBounds {
        doc_id: String,
        start: usize,
        end: usize,
        len: usize,
    },

    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(
        source_name: impl Into<String>,
        line: usize,
        message: impl Into<String>,
    ) -> Self {
        Error::Malformed {
            source_name: source_name.into(),
            line,
            message: message.into(),
        }
    }
}
