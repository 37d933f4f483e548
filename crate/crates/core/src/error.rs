use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CohortError {
    #[error("line {line}: {reason}")]
    Syntax { line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("malformed XML: {0}")]
    MalformedXml(String),
    #[error("invalid envelope: {0}")]
    InvalidEnvelope(String),
}

impl WireError {
    pub(crate) fn malformed(reason: impl Into<String>) -> Self {
        WireError::MalformedXml(reason.into())
    }

    pub(crate) fn invalid(reason: impl Into<String>) -> Self {
        WireError::InvalidEnvelope(reason.into())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticsError {
    #[error("age {0} months is outside the available span")]
    OutOfRange(f64),
    #[error("no data points")]
    NoData,
    #[error("child and reference spans do not overlap")]
    NoOverlap,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
