//! Versioned JSON document for a fitted model and the preprocessing applied
//! before fitting.
//!
//! ```json
//! {
//!   "format": "relf-model",
//!   "version": 1,
//!   "ensemble": ["welsch:1", "l1l2", "huber:1"],
//!   "config": {"alpha": 1e-8, "max_iters": 30, "rel_tol": 1e-8, "init": {"kind": "zeros"}},
//!   "w": [...],
//!   "lambda": [...],
//!   "trace": {"initial_risk": ..., "iterations": [{"iteration": 1, "risk": ..., "max_step": ...}], "converged": true},
//!   "preprocessing": {"intercept": true, "scaler": null}
//! }
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{add_intercept, apply_scaler, DataError, Dataset, ScalerState};
use crate::loss::EnsembleSpec;
use crate::solver::{RelfModel, SolverConfig, SolverTrace};

pub const MODEL_FORMAT: &str = "relf-model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed model document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported model document {format} v{version}")]
    Unsupported { format: String, version: u32 },
}

/// Transformations applied to raw features before the linear model.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Preprocessing {
    pub intercept: bool,
    pub scaler: Option<ScalerState>,
}

impl Preprocessing {
    /// Scales (if configured) and then appends the intercept (if configured).
    pub fn apply(&self, ds: &Dataset) -> Result<Dataset, DataError> {
        let scaled = match &self.scaler {
            Some(s) => apply_scaler(ds, s)?,
            None => ds.clone(),
        };
        if self.intercept {
            add_intercept(&scaled)
        } else {
            Ok(scaled)
        }
    }

    /// Number of raw input features the model expects.
    pub fn raw_width(&self, model_width: usize) -> usize {
        model_width - usize::from(self.intercept)
    }

    pub fn unscale_predictions(&self, values: &mut [f64]) {
        if let Some(s) = &self.scaler {
            s.unscale_labels(values);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub format: String,
    pub version: u32,
    pub ensemble: EnsembleSpec,
    pub config: SolverConfig,
    pub w: Vec<f64>,
    pub lambda: Vec<f64>,
    pub trace: SolverTrace,
    pub preprocessing: Preprocessing,
}

impl ModelDocument {
    pub fn new(model: &RelfModel, preprocessing: Preprocessing) -> Self {
        ModelDocument {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            ensemble: model.ensemble.clone(),
            config: model.config,
            w: model.w.clone(),
            lambda: model.lambda.clone(),
            trace: model.trace.clone(),
            preprocessing,
        }
    }

    pub fn model(&self) -> RelfModel {
        RelfModel {
            w: self.w.clone(),
            lambda: self.lambda.clone(),
            ensemble: self.ensemble.clone(),
            config: self.config,
            trace: self.trace.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model document is always serializable")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelIoError> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        if doc.format != MODEL_FORMAT || doc.version != MODEL_VERSION {
            return Err(ModelIoError::Unsupported {
                format: doc.format,
                version: doc.version,
            });
        }
        Ok(doc)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelIoError> {
        fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelIoError> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
