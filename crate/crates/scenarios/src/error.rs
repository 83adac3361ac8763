use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] chlab_core::Error),
    #[error("I/O failure: {0}")]
    Io(#[from] io::Error),
    #[error("I/O failure: {0}")]
    Csv(#[from] csv::Error),
}

impl ScenarioError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            ScenarioError::InvalidConfig(_) => 2,
            ScenarioError::Numerical(_) => 3,
            ScenarioError::Io(_) | ScenarioError::Csv(_) => 4,
        }
    }
}

impl From<serde_json::Error> for ScenarioError {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            ScenarioError::Io(e.into())
        } else {
            ScenarioError::InvalidConfig(e.to_string())
        }
    }
}

pub type Result<T> = std::result::Result<T, ScenarioError>;

pub(crate) fn invalid(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::InvalidConfig(msg.into())
}
