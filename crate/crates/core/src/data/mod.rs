//! Datasets, feature scaling and intercept handling.

mod io;
mod synth;

pub use io::{load_csv, load_libsvm, read_csv, read_libsvm, write_libsvm, LabelColumn};
pub use synth::{inject_outliers, synth_line, NoiseConfig, NoiseMode, ToyConfig, TOY_SLOPE};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("row {row} has {found} columns, expected {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("no samples in input")]
    EmptyFile,
    #[error("feature index {index} on line {line} is not positive (indices are 1-based)")]
    NonPositiveIndex { line: usize, index: i64 },
    #[error("label column {0} not found")]
    MissingLabelColumn(String),
    #[error("dataset already has an intercept column")]
    DoubleIntercept,
    #[error("outlier fraction must lie in [0, 1], got {0}")]
    FractionOutOfRange(f64),
    #[error("invalid noise configuration: {0}")]
    InvalidNoise(String),
    #[error("non-finite value in dataset (row {row})")]
    NonFinite { row: usize },
    #[error("expected {expected} features, got {found}")]
    WidthMismatch { expected: usize, found: usize },
}

/// `n` samples with `d` features, stored row-major, plus labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    features: Vec<f64>,
    n_features: usize,
    labels: Vec<f64>,
    feature_names: Option<Vec<String>>,
    intercept: bool,
}

impl Dataset {
    /// Builds from per-sample rows. All rows must have the same width.
    pub fn from_rows(rows: Vec<Vec<f64>>, labels: Vec<f64>) -> Result<Self, DataError> {
        let n_features = rows.first().map_or(0, Vec::len);
        if let Some((row, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n_features) {
            return Err(DataError::RaggedRows {
                row,
                expected: n_features,
                found: r.len(),
            });
        }
        let features = rows.into_iter().flatten().collect();
        Self::from_flat(features, n_features, labels)
    }

    /// Builds from a row-major buffer of `labels.len() * n_features` values.
    pub fn from_flat(
        features: Vec<f64>,
        n_features: usize,
        labels: Vec<f64>,
    ) -> Result<Self, DataError> {
        if labels.is_empty() {
            return Err(DataError::EmptyFile);
        }
        let expected = labels.len() * n_features;
        if features.len() != expected {
            return Err(DataError::WidthMismatch {
                expected,
                found: features.len(),
            });
        }
        let ds = Dataset {
            features,
            n_features,
            labels,
            feature_names: None,
            intercept: false,
        };
        if let Some(row) = ds.first_non_finite_row() {
            return Err(DataError::NonFinite { row });
        }
        Ok(ds)
    }

    /// A dataset of one feature column.
    pub fn from_column(x: &[f64], labels: Vec<f64>) -> Result<Self, DataError> {
        Self::from_flat(x.to_vec(), 1, labels)
    }

    fn first_non_finite_row(&self) -> Option<usize> {
        (0..self.n_samples())
            .find(|&i| !self.labels[i].is_finite() || self.row(i).iter().any(|v| !v.is_finite()))
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Self {
        self.feature_names = Some(names);
        self
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn has_intercept(&self) -> bool {
        self.intercept
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.n_samples()).map(move |i| self.row(i))
    }

    /// Feature column `j`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// The samples at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self, DataError> {
        if indices.is_empty() {
            return Err(DataError::EmptyFile);
        }
        let mut features = Vec::with_capacity(indices.len() * self.n_features);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Ok(Dataset {
            features,
            n_features: self.n_features,
            labels,
            feature_names: self.feature_names.clone(),
            intercept: self.intercept,
        })
    }

    pub fn with_labels(&self, labels: Vec<f64>) -> Result<Self, DataError> {
        if labels.len() != self.n_samples() {
            return Err(DataError::WidthMismatch {
                expected: self.n_samples(),
                found: labels.len(),
            });
        }
        let mut ds = self.clone();
        ds.labels = labels;
        Ok(ds)
    }

    /// Zero-pads every row on the right up to `width` features.
    pub fn pad_features(&self, width: usize) -> Result<Self, DataError> {
        if width < self.n_features {
            return Err(DataError::WidthMismatch {
                expected: width,
                found: self.n_features,
            });
        }
        let mut features = Vec::with_capacity(self.n_samples() * width);
        for r in self.rows() {
            features.extend_from_slice(r);
            features.resize(features.len() + width - self.n_features, 0.0);
        }
        let mut ds = self.clone();
        ds.features = features;
        ds.n_features = width;
        Ok(ds)
    }

    /// Number of columns excluding the intercept, if any.
    fn scalable_columns(&self) -> usize {
        self.n_features - usize::from(self.intercept)
    }
}

/// Appends a constant-1 column.
pub fn add_intercept(ds: &Dataset) -> Result<Dataset, DataError> {
    if ds.intercept {
        return Err(DataError::DoubleIntercept);
    }
    let d = ds.n_features;
    let mut features = Vec::with_capacity(ds.n_samples() * (d + 1));
    for r in ds.rows() {
        features.extend_from_slice(r);
        features.push(1.0);
    }
    let feature_names = ds.feature_names.clone().map(|mut names| {
        names.push("intercept".to_string());
        names
    });
    Ok(Dataset {
        features,
        n_features: d + 1,
        labels: ds.labels.clone(),
        feature_names,
        intercept: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    fn of(values: impl IntoIterator<Item = f64>) -> Self {
        values.into_iter().fold(
            Range {
                min: f64::INFINITY,
                max: f64::NEG_INFINITY,
            },
            |r, v| Range {
                min: r.min.min(v),
                max: r.max.max(v),
            },
        )
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }

    /// Affine map sending `min -> -1`, `max -> +1`; a degenerate range maps to 0.
    pub fn forward(&self, v: f64) -> f64 {
        let w = self.width();
        if w > 0.0 {
            2.0 * (v - self.min) / w - 1.0
        } else {
            0.0
        }
    }

    pub fn inverse(&self, v: f64) -> f64 {
        let w = self.width();
        if w > 0.0 {
            (v + 1.0) * 0.5 * w + self.min
        } else {
            self.min
        }
    }
}

/// Per-column ranges captured from training data. The intercept column is never scaled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerState {
    /// `None` leaves features untouched.
    pub features: Option<Vec<Range>>,
    pub label: Option<Range>,
}

pub fn fit_scaler(ds: &Dataset, scale_labels: bool) -> ScalerState {
    let features = (0..ds.scalable_columns())
        .map(|j| Range::of(ds.rows().map(|r| r[j])))
        .collect();
    let label = scale_labels.then(|| Range::of(ds.labels.iter().copied()));
    ScalerState {
        features: Some(features),
        label,
    }
}

/// Maps each feature into `[-1, 1]` using training ranges. Values outside the
/// training range extrapolate linearly.
pub fn apply_scaler(ds: &Dataset, state: &ScalerState) -> Result<Dataset, DataError> {
    let mut out = ds.clone();
    if let Some(ranges) = &state.features {
        let cols = ds.scalable_columns();
        if cols != ranges.len() {
            return Err(DataError::WidthMismatch {
                expected: ranges.len(),
                found: cols,
            });
        }
        let d = ds.n_features;
        if d > 0 {
            for row in out.features.chunks_exact_mut(d) {
                for (v, range) in row.iter_mut().zip(ranges) {
                    *v = range.forward(*v);
                }
            }
        }
    }
    if let Some(range) = &state.label {
        for y in &mut out.labels {
            *y = range.forward(*y);
        }
    }
    Ok(out)
}

impl ScalerState {
    /// Scales labels only.
    pub fn labels_only(ds: &Dataset) -> Self {
        ScalerState {
            features: None,
            label: Some(Range::of(ds.labels.iter().copied())),
        }
    }

    /// Maps predictions back to label units (identity when labels were not scaled).
    pub fn unscale_labels(&self, values: &mut [f64]) {
        if let Some(range) = &self.label {
            for v in values {
                *v = range.inverse(*v);
            }
        }
    }
}
