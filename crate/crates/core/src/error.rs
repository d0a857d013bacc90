use thiserror::Error;

/// Errors returned by summary construction, maintenance and queries.
#[derive(Debug, Error)]
pub enum Error {
    #[error("epsilon must lie in (0, 0.5], got {0}")]
    InvalidEpsilon(f64),
    #[error("value must be finite, got {0}")]
    NonFiniteValue(f64),
    #[error("summary is empty")]
    EmptySummary,
    #[error("quantile must lie in (0, 1], got {0}")]
    InvalidQuantile(f64),
    #[error("summaries have different error modes")]
    ModeMismatch,
    #[error("data set is empty")]
    EmptyData,
    #[error("tail index {index} out of range for stream length {n}")]
    TailIndexOutOfRange { index: u64, n: u64 },
    #[error("invalid stream spec: {0}")]
    InvalidSpec(String),
    #[error("invalid snapshot: {0}")]
    InvalidSnapshot(String),
    #[error("failed to write report: {0}")]
    Report(String),
}
