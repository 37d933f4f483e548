use std::path::PathBuf;

use bib_core::CohortError;

use crate::endpoint::TransportError;

#[derive(Debug, thiserror::Error)]
pub enum SyncError {
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("network: {0}")]
    Network(#[from] TransportError),
    #[error("protocol: {0}")]
    Protocol(String),
    #[error("a sync is already running")]
    Busy,
    #[error("store is empty; sync first")]
    EmptyStore,
    #[error(transparent)]
    Store(#[from] StoreFileError),
}

#[derive(Debug, thiserror::Error)]
pub enum StoreFileError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}, line {line}: {reason}")]
    Corrupt { path: PathBuf, line: usize, reason: String },
    #[error("{path}: {source}")]
    Cohort { path: PathBuf, source: CohortError },
    #[error("token must be non-empty printable text without whitespace")]
    InvalidToken,
}
