use std::path::PathBuf;

use thiserror::Error;

/// One rejected input row: 1-based row number and what was wrong with it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowIssue {
    pub row: usize,
    pub reason: String,
}

impl std::fmt::Display for RowIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "row {}: {}", self.row, self.reason)
    }
}

fn join_rows(rows: &[RowIssue]) -> String {
    const SHOWN: usize = 10;
    let mut s = rows
        .iter()
        .take(SHOWN)
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ");
    if rows.len() > SHOWN {
        s.push_str(&format!("; ... ({} more)", rows.len() - SHOWN));
    }
    s
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("ingestion failed for {} row(s): {}", .0.len(), join_rows(.0))]
    Ingest(Vec<RowIssue>),

    #[error("validation failed for {} row(s): {}", .0.len(), join_rows(.0))]
    Validation(Vec<RowIssue>),

    #[error("data error: {0}")]
    Data(String),

    #[error("shape mismatch in {op}: {detail}")]
    Shape { op: &'static str, detail: String },

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("lookup error: token id {id} out of range for vocabulary of size {size}")]
    Lookup { id: usize, size: usize },

    #[error("embedding load error at row {row}: {reason}")]
    EmbeddingLoad { row: usize, reason: String },

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn shape(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Shape { op, detail: detail.into() }
    }

    /// Process exit code for the command-line tool: 2 config, 3 data, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Ingest(_)
            | Error::Validation(_)
            | Error::Data(_)
            | Error::Lookup { .. }
            | Error::EmbeddingLoad { .. }
            | Error::Checkpoint(_)
            | Error::Io { .. }
            | Error::Json(_) => 3,
            Error::Shape { .. } | Error::NonFinite(_) | Error::Numeric(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
