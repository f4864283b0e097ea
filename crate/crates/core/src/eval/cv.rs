//! K-fold cross-validation with per-fold preprocessing and optional training
//! contamination.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{fit_scaler, inject_outliers, Dataset, NoiseConfig, ScalerState};
use crate::model::Preprocessing;
use crate::solver::{decrease_ratio, predict};

use super::metrics::{mae, rmse};
use super::{EvalError, Method};

/// Iteration indices of the reported decrease ratio.
const RATIO_EARLY: usize = 10;
const RATIO_FINAL: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CvConfig {
    pub folds: usize,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            folds: 10,
            seed: 0,
            shuffle: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Splits `0..n` into `folds` disjoint test sets whose sizes differ by at most
/// one (the first `n % folds` folds get the extra sample). Every index is tested
/// exactly once; training sets are the complements in ascending order.
pub fn kfold_split(n: usize, cfg: &CvConfig) -> Result<Vec<Fold>, EvalError> {
    let k = cfg.folds;
    if k < 2 || k > n {
        return Err(EvalError::TooManyFolds { n, folds: k });
    }
    let mut order: Vec<usize> = (0..n).collect();
    if cfg.shuffle {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
    }
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        let mut test = order[start..start + size].to_vec();
        test.sort_unstable();
        let mut in_test = vec![false; n];
        for &i in &test {
            in_test[i] = true;
        }
        let train = (0..n).filter(|&i| !in_test[i]).collect();
        folds.push(Fold { train, test });
        start += size;
    }
    Ok(folds)
}

/// How raw features are prepared before fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Preprocess {
    /// Map features into `[-1, 1]` using training-fold ranges.
    pub normalize_features: bool,
    /// Also map labels; predictions are mapped back before scoring.
    pub scale_labels: bool,
    pub intercept: bool,
}

impl Preprocess {
    /// Settings for real datasets: normalized features with an intercept.
    pub fn standard() -> Self {
        Preprocess {
            normalize_features: true,
            scale_labels: false,
            intercept: true,
        }
    }

    /// Raw features, no intercept.
    pub fn raw() -> Self {
        Preprocess {
            normalize_features: false,
            scale_labels: false,
            intercept: false,
        }
    }

    /// Fits the preprocessing on a training set.
    pub fn fit(&self, train: &Dataset) -> Preprocessing {
        let scaler = match (self.normalize_features, self.scale_labels) {
            (true, labels) => Some(fit_scaler(train, labels)),
            (false, true) => Some(ScalerState::labels_only(train)),
            (false, false) => None,
        };
        Preprocessing {
            intercept: self.intercept,
            scaler,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub mae: f64,
    pub rmse: f64,
    pub iterations: Option<usize>,
    pub decrease_ratio: Option<f64>,
    pub lambda: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub folds: Vec<FoldResult>,
    pub mean_mae: f64,
    pub std_mae: f64,
    pub mean_rmse: f64,
    pub std_rmse: f64,
}

impl CvResult {
    fn from_folds(folds: Vec<FoldResult>) -> Self {
        let maes: Vec<f64> = folds.iter().map(|f| f.mae).collect();
        let rmses: Vec<f64> = folds.iter().map(|f| f.rmse).collect();
        let (mean_mae, std_mae) = mean_std(&maes);
        let (mean_rmse, std_rmse) = mean_std(&rmses);
        CvResult {
            folds,
            mean_mae,
            std_mae,
            mean_rmse,
            std_rmse,
        }
    }

    /// Mean decrease ratio over folds that report one.
    pub fn mean_decrease_ratio(&self) -> Option<f64> {
        let v: Vec<f64> = self.folds.iter().filter_map(|f| f.decrease_ratio).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    pub fn mean_lambda(&self) -> Option<Vec<f64>> {
        let all: Vec<&Vec<f64>> = self
            .folds
            .iter()
            .filter_map(|f| f.lambda.as_ref())
            .collect();
        let first = all.first()?;
        let mut mean = vec![0.0; first.len()];
        for l in &all {
            for (m, v) in mean.iter_mut().zip(l.iter()) {
                *m += v;
            }
        }
        Some(mean.into_iter().map(|m| m / all.len() as f64).collect())
    }
}

/// Mean and sample standard deviation (zero for a single value).
fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Runs k-fold cross-validation of `method` on `ds`.
///
/// Per fold: the training part is contaminated (if `contamination` is given,
/// with seed `contamination.seed + fold`), preprocessing is fitted on it and
/// applied to both parts, the method is fitted, and the clean test part is
/// scored in label units.
pub fn cross_validate(
    ds: &Dataset,
    method: &Method,
    cv: &CvConfig,
    prep: &Preprocess,
    contamination: Option<&NoiseConfig>,
) -> Result<CvResult, EvalError> {
    let splits = kfold_split(ds.n_samples(), cv)?;
    let mut folds = Vec::with_capacity(splits.len());
    for (f, split) in splits.iter().enumerate() {
        let mut train = ds.subset(&split.train)?;
        let test = ds.subset(&split.test)?;
        if let Some(noise) = contamination {
            let noise = NoiseConfig {
                seed: noise.seed.wrapping_add(f as u64),
                ..*noise
            };
            train = inject_outliers(&train, &noise)?;
        }
        let pre = prep.fit(&train);
        let fitted = method.fit(&pre.apply(&train)?)?;
        let mut y_hat = predict(&fitted.w, &pre.apply(&test)?)?;
        pre.unscale_predictions(&mut y_hat);

        let decrease = fitted.trace.as_ref().and_then(|t| {
            let last = RATIO_FINAL.min(t.len().max(1));
            let early = RATIO_EARLY.min(last);
            decrease_ratio(t, early, last.max(early))
                .ok()
                .map(|r| r.value)
        });
        folds.push(FoldResult {
            mae: mae(test.labels(), &y_hat)?,
            rmse: rmse(test.labels(), &y_hat)?,
            iterations: fitted.trace.as_ref().map(|t| t.len()),
            decrease_ratio: decrease,
            lambda: fitted.lambda,
        });
    }
    Ok(CvResult::from_folds(folds))
}
