use std::path::PathBuf;

use bib_core::cohort::ValidationReport;
use bib_core::wire::FaultCode;
use bib_core::{CohortError, Timestamp};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SwapError {
    #[error("stale import: {offered} is not newer than the active {current}")]
    StaleImport { current: Timestamp, offered: Timestamp },
    #[error("snapshot failed validation with {} violation(s)", .0.errors.len())]
    InvalidSnapshot(ValidationReport),
}

/// Handler failures; each maps onto exactly one fault code.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ServiceError {
    #[error("authentication failed")]
    AuthFailed,
    #[error("access denied: {0}")]
    AccessDenied(String),
    #[error("not found: {0}")]
    NotFound(String),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl ServiceError {
    pub fn fault_code(&self) -> FaultCode {
        match self {
            ServiceError::AuthFailed => FaultCode::AuthFailed,
            ServiceError::AccessDenied(_) => FaultCode::AccessDenied,
            ServiceError::NotFound(_) => FaultCode::NotFound,
            ServiceError::BadRequest(_) => FaultCode::BadRequest,
            ServiceError::Internal(_) => FaultCode::Internal,
        }
    }
}

#[derive(Debug, Error)]
pub enum RecoveryError {
    #[error("hint must not be empty")]
    EmptyHint,
    #[error("hint is {0} characters, the limit is 500")]
    HintTooLong(usize),
    #[error("no recovery request with id {0}")]
    UnknownRequest(u64),
    #[error("recovery request {0} is already handled")]
    AlreadyHandled(u64),
    #[error("recovery log {path}, line {line}: {reason}")]
    CorruptLog { path: PathBuf, line: usize, reason: String },
    #[error("recovery log {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Cohort { path: PathBuf, source: CohortError },
    #[error("token table {path}, line {line}: {reason}")]
    TokenFile { path: PathBuf, line: usize, reason: String },
    #[error("no installed snapshot in {0}")]
    NoSnapshot(PathBuf),
    #[error("no token table at {0}")]
    NoTokens(PathBuf),
    #[error(transparent)]
    Swap(#[from] SwapError),
    #[error(transparent)]
    Recovery(#[from] RecoveryError),
}
