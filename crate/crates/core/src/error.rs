use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A caller handed in a value outside the operation's domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An internal precondition (dimensions, positive definiteness) was broken.
    #[error("contract violation: {0}")]
    ContractViolation(String),

    /// An adaptive loop produced non-finite or runaway gains/covariance.
    #[error("adaptive loop diverged at step {step}: {detail}")]
    Divergence { step: u64, detail: String },

    /// The vehicle simulation left its valid envelope.
    #[error("simulator fault at step {step}: {detail}")]
    SimulatorFault { step: u64, detail: String },

    #[error("config error in {path}: {detail}")]
    Config { path: PathBuf, detail: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::ContractViolation(msg.into())
    }
}
