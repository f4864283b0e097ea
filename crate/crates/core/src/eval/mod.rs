//! Metrics, baselines, cross-validation and the contamination benchmark.

mod bench;
mod cv;
mod method;
mod metrics;

pub use bench::{
    run_benchmark, write_report, CellReport, CellStatus, DatasetEntry, DatasetFormat, EvalReport,
    IncreaseRatioEntry, Manifest, MethodEntry, REPORT_FORMAT, REPORT_VERSION,
};
pub use cv::{cross_validate, kfold_split, CvConfig, CvResult, Fold, FoldResult, Preprocess};
pub use method::{ols_fit, Fitted, Method};
pub use metrics::{increase_ratio, mae, rmse};

use thiserror::Error;

use crate::data::DataError;
use crate::loss::LossError;
use crate::solver::SolverError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("length mismatch: {0} targets vs {1} predictions")]
    LengthMismatch(usize, usize),
    #[error("no samples to score")]
    Empty,
    #[error("cannot split {n} samples into {folds} folds")]
    TooManyFolds { n: usize, folds: usize },
    #[error("clean MAE is zero; increase ratio undefined")]
    ZeroCleanMae,
    #[error("invalid method `{0}`")]
    InvalidMethod(String),
    #[error("invalid manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
