use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Load {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed csv in {path}: {message}")]
    Csv { path: PathBuf, message: String },
    #[error("{file}: {} row(s) reference missing records: {}", .rows.len(), format_rows(.rows))]
    DanglingIds { file: String, rows: Vec<usize> },
    #[error("{0}")]
    Invalid(String),
}

fn format_rows(rows: &[usize]) -> String {
    let shown: Vec<String> = rows.iter().take(10).map(|r| r.to_string()).collect();
    if rows.len() > 10 {
        format!("{}, ...", shown.join(", "))
    } else {
        shown.join(", ")
    }
}

#[derive(Debug, Error)]
pub enum MatcherError {
    /// A transport-level failure talking to an external matcher. Safe to retry.
    #[error("matcher transport failure (request {request_id}): {message}")]
    Transport { request_id: String, message: String },
    #[error("matcher rejected request {request_id}: {message}")]
    Remote { request_id: String, message: String },
    #[error("matcher handshake failed: {0}")]
    Handshake(String),
    #[error("matcher returned {got} scores for {expected} pairs")]
    Shape { expected: usize, got: usize },
    #[error("matcher returned invalid score {0}")]
    InvalidScore(f64),
    #[error("matcher configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl MatcherError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, MatcherError::Transport { .. })
    }
}

/// Failure while producing an explanation. Carries how far the granularity
/// search got so a caller can resume or report.
#[derive(Debug, Error)]
#[error("explaining pair {pair_id} failed at granularity {granularity}: {source}")]
pub struct ExplainError {
    pub pair_id: String,
    pub granularity: usize,
    #[source]
    pub source: MatcherError,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Matcher(#[from] MatcherError),
    #[error(transparent)]
    Explain(#[from] ExplainError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
