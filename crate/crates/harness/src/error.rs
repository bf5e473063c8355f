use std::path::PathBuf;

use fanos_core::lbfgs::LbfgsError;
use fanos_core::objectives::ObjectiveError;
use fanos_core::optim::OptimError;
use fanos_core::stats::StatsError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown method '{0}'")]
    UnknownMethod(String),
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("initial loss is not finite ({0})")]
    NonFiniteInitialLoss(f64),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Optim(#[from] OptimError),
    #[error(transparent)]
    Lbfgs(#[from] LbfgsError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{}: {source}", path.display())]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("worker pool: {0}")]
    Pool(String),
}

pub type Result<T> = std::result::Result<T, HarnessError>;
