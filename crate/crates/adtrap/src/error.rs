use std::path::PathBuf;

use adtrap_core::simulation::{ScenarioError, SimError, SweepError};
use adtrap_core::trap::TrapError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {pointer}: {message}", path.display())]
    Parse {
        path: PathBuf,
        pointer: String,
        message: String,
    },
    #[error("{}: {source}", path.display())]
    Invalid {
        path: PathBuf,
        source: ScenarioError,
    },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error(transparent)]
    Run(#[from] SimError),
    #[error(transparent)]
    Attack(#[from] TrapError),
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
}

impl CliError {
    /// 1 for anything wrong with the input, 2 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Invalid { .. } | CliError::Usage(_) => 1,
            CliError::Sweep(e) => match e {
                SweepError::Run { .. } => 2,
                _ => 1,
            },
            _ => 2,
        }
    }
}
