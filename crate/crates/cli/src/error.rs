use std::path::PathBuf;

use mukf_core::runner::RunError;
use mukf_core::{ConfigError, LogError, NavError, SimError, UkfError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("simulation failed: {0}")]
    Sim(#[from] SimError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error("filter failed {0}")]
    Run(#[from] RunError),
    #[error("results and truth do not share a time base: {0}")]
    TimeBaseMismatch(String),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 2 configuration, 3 data, 4 filter divergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Sim(_) | CliError::Usage(_) => 2,
            CliError::Run(e) if is_divergence(&e.source) => 4,
            _ => 3,
        }
    }
}

pub fn is_divergence(e: &NavError) -> bool {
    matches!(
        e,
        NavError::Diverged(_) | NavError::Ukf(UkfError::CovarianceNotPsd { .. })
    )
}
