use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UkfError {
    /// Covariance could not be factored even after diagonal jitter; the
    /// filter has numerically diverged.
    #[error("covariance is not positive semi-definite (jitter reached {jitter:e})")]
    CovarianceNotPsd { jitter: f64 },
    #[error("innovation covariance is singular")]
    InnovationCovarianceSingular,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Error)]
pub enum NavError {
    #[error("time step must be positive, got {0}")]
    NonPositiveDt(f64),
    #[error("thruster command has {got} entries, allocation has {expected} columns")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("ADCP cell range {range} m outside [0, {max}] m")]
    CellOutOfRange { range: f64, max: f64 },
    #[error("filter used before initialization")]
    NotInitialized,
    #[error("filter diverged: {0}")]
    Diverged(String),
    #[error(transparent)]
    Ukf(#[from] UkfError),
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("inertia matrix is not invertible")]
    SingularInertia,
    #[error("invalid mission: {0}")]
    InvalidMission(String),
    #[error("invalid sensor spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Error)]
pub enum LogError {
    #[error("{path}: unsupported or missing log header: {found:?}")]
    SchemaMismatch { path: PathBuf, found: String },
    #[error("{path}:{line}: timestamp {t} precedes previous record at {prev}")]
    NonMonotoneTimestamp {
        path: PathBuf,
        line: usize,
        t: f64,
        prev: f64,
    },
    #[error("{path}:{line}: malformed record: {reason}")]
    MalformedRecord {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
