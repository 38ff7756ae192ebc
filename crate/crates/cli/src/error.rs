use std::path::PathBuf;

use dppkit_core::costmodel::CostError;
use dppkit_core::dpp::DppError;
use dppkit_core::lifecycle::LifecycleError;
use dppkit_core::vdr::LedgerError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Lifecycle(#[from] LifecycleError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Dpp(#[from] DppError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Invalid(String),
    #[error("line {line}: {message}")]
    Script { line: usize, message: String },
    #[error("ledger {0} diverges from its session journal")]
    Diverged(PathBuf),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}
