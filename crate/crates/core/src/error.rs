use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("infeasible graph parameters: {0}")]
    Infeasible(String),
    #[error("rejection budget exhausted after {0} attempts")]
    RejectionBudget(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("{what}: required work {needed} exceeds cap {cap}")]
    CapExceeded {
        what: &'static str,
        needed: u128,
        cap: u128,
    },
    #[error("alist line {line}: {msg}")]
    Alist { line: usize, msg: String },
    #[error("no root found: {0}")]
    NoRoot(String),
    #[error("singular input: {0}")]
    Singular(String),
    #[error("internal consistency failure: {0}")]
    Inconsistent(String),
    #[error("config: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
