//! Alternating half-quadratic minimization of an ensemble M-estimator risk.
//!
//! For a linear model `y ≈ w·x` and base losses `phi_1..phi_m`, the solver
//! minimizes `R(w) = Σ_i Σ_k phi_k(y_i - w·x_i)` by alternating two closed-form
//! steps:
//!
//! 1. with `w` fixed, every auxiliary weight is set to its minimizer,
//!    `p_ik = delta_k(e_i)`;
//! 2. with `P` fixed, `w` solves the jittered weighted normal equations
//!    `(Σ_i s_i x_i x_iᵀ + αI) w = Σ_i s_i y_i x_i`, where `s_i = Σ_k p_ik`.
//!
//! Each step cannot increase the half-quadratic objective, and the objective
//! equals `R` right after step 1, so the recorded risk sequence is
//! non-increasing. Ensemble weights are read off the final `P` as normalized
//! column sums: `λ_k = Σ_i p_ik / Σ_j Σ_i p_ij`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Dataset;
use crate::linalg::{self, LinalgError, SymMatrix};
use crate::loss::EnsembleSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("objective became non-finite at iteration {iteration}")]
    NonFiniteObjective { iteration: usize },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("trace index {index} out of range for a trace of {len} iterations")]
    TraceIndex { index: usize, len: usize },
}

impl SolverError {
    /// True for numerical failures of a well-formed problem, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            SolverError::NonFiniteObjective { .. }
                | SolverError::Linalg(LinalgError::FactorizationFailure { .. })
                | SolverError::Linalg(LinalgError::NonFinite)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Init {
    Zeros,
    /// Isotropic `N(0, std^2)` draw per coordinate.
    Gaussian {
        seed: u64,
        std: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Diagonal jitter added to the weighted Gram matrix.
    pub alpha: f64,
    pub max_iters: usize,
    /// Stop once `|R_prev - R| <= rel_tol * max(1, R_prev)`.
    pub rel_tol: f64,
    pub init: Init,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            alpha: 1e-8,
            max_iters: 30,
            rel_tol: 1e-8,
            init: Init::Zeros,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(SolverError::InvalidConfig(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if self.max_iters == 0 {
            return Err(SolverError::InvalidConfig(
                "max_iters must be at least 1".into(),
            ));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(SolverError::InvalidConfig(format!(
                "rel_tol must be positive, got {}",
                self.rel_tol
            )));
        }
        if let Init::Gaussian { std, .. } = self.init {
            if !(std > 0.0 && std.is_finite()) {
                return Err(SolverError::InvalidConfig(format!(
                    "init std must be positive, got {std}"
                )));
            }
        }
        Ok(())
    }

    fn initial_params(&self, d: usize) -> Vec<f64> {
        match self.init {
            Init::Zeros => vec![0.0; d],
            Init::Gaussian { seed, std } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let normal = Normal::new(0.0, std).expect("std validated");
                (0..d).map(|_| normal.sample(&mut rng)).collect()
            }
        }
    }
}

/// Auxiliary weights `p_ik`, one row per sample and one column per base loss.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    n_losses: usize,
    data: Vec<f64>,
}

impl WeightMatrix {
    pub fn n_samples(&self) -> usize {
        self.data.len().checked_div(self.n_losses).unwrap_or(0)
    }

    pub fn n_losses(&self) -> usize {
        self.n_losses
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.data[i * self.n_losses + k]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_losses..(i + 1) * self.n_losses]
    }

    /// Builds from explicit rows; every entry must be positive and finite.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, SolverError> {
        let m = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * m);
        for r in rows {
            if r.len() != m {
                return Err(SolverError::DimensionMismatch {
                    expected: m,
                    found: r.len(),
                });
            }
            if r.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(SolverError::InvalidConfig(
                    "weights must be positive and finite".into(),
                ));
            }
            data.extend_from_slice(r);
        }
        Ok(WeightMatrix { n_losses: m, data })
    }

    /// Per-sample total weight `s_i = Σ_k p_ik`.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n_samples())
            .map(|i| self.row(i).iter().sum())
            .collect()
    }

    /// Per-loss total weight `Σ_i p_ik`.
    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n_losses];
        for i in 0..self.n_samples() {
            for (s, p) in sums.iter_mut().zip(self.row(i)) {
                *s += p;
            }
        }
        sums
    }

    /// Column sums divided by their total, so they lie on the probability simplex.
    pub fn ensemble_weights(&self) -> Vec<f64> {
        let sums = self.column_sums();
        let total: f64 = sums.iter().sum();
        sums.iter().map(|s| s / total).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// 1-based iteration number.
    pub iteration: usize,
    /// Risk after this iteration's parameter update.
    pub risk: f64,
    /// Largest absolute parameter change in this iteration.
    pub max_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverTrace {
    /// Risk at the initial parameters.
    pub initial_risk: f64,
    pub iterations: Vec<IterationRecord>,
    pub converged: bool,
}

impl SolverTrace {
    pub fn len(&self) -> usize {
        self.iterations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.iterations.is_empty()
    }

    pub fn risks(&self) -> Vec<f64> {
        self.iterations.iter().map(|r| r.risk).collect()
    }

    pub fn final_risk(&self) -> f64 {
        self.iterations.last().map_or(self.initial_risk, |r| r.risk)
    }

    /// Risk after 1-based iteration `s`. A converged trace is held at its last
    /// value beyond its length, since further iterations reproduce the fixed point.
    pub fn risk_at(&self, s: usize) -> Result<f64, SolverError> {
        let len = self.len();
        let out_of_range = SolverError::TraceIndex { index: s, len };
        if s == 0 || len == 0 {
            return Err(out_of_range);
        }
        match self.iterations.get(s - 1) {
            Some(r) => Ok(r.risk),
            None if self.converged => Ok(self.final_risk()),
            None => Err(out_of_range),
        }
    }

    /// Whether every recorded risk is at most `(1 + slack)` times its predecessor,
    /// starting from the initial risk.
    pub fn is_monotone(&self, slack: f64) -> bool {
        let mut prev = self.initial_risk;
        self.iterations.iter().all(|r| {
            let ok = r.risk <= prev * (1.0 + slack) || r.risk <= prev;
            prev = r.risk;
            ok
        })
    }
}

/// A fitted linear model with its learned ensemble weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelfModel {
    pub w: Vec<f64>,
    /// Normalized ensemble weights, aligned with `ensemble`.
    pub lambda: Vec<f64>,
    pub ensemble: EnsembleSpec,
    pub config: SolverConfig,
    pub trace: SolverTrace,
}

impl RelfModel {
    pub fn predict(&self, ds: &Dataset) -> Result<Vec<f64>, SolverError> {
        predict(&self.w, ds)
    }

    pub fn iterations(&self) -> usize {
        self.trace.len()
    }
}

fn check_width(w: &[f64], ds: &Dataset) -> Result<(), SolverError> {
    if w.len() != ds.n_features() {
        return Err(SolverError::DimensionMismatch {
            expected: ds.n_features(),
            found: w.len(),
        });
    }
    Ok(())
}

/// `e_i = y_i - w·x_i`.
pub fn residuals(w: &[f64], ds: &Dataset) -> Result<Vec<f64>, SolverError> {
    check_width(w, ds)?;
    Ok(ds
        .rows()
        .zip(ds.labels())
        .map(|(x, y)| y - linalg::dot_unchecked(w, x))
        .collect())
}

/// `ŷ_i = w·x_i`.
pub fn predict(w: &[f64], ds: &Dataset) -> Result<Vec<f64>, SolverError> {
    check_width(w, ds)?;
    Ok(ds.rows().map(|x| linalg::dot_unchecked(w, x)).collect())
}

/// The P-step: `p_ik = delta_k(e_i)`.
pub fn update_weights(ensemble: &EnsembleSpec, residuals: &[f64]) -> WeightMatrix {
    let losses = ensemble.losses();
    let data = residuals
        .iter()
        .flat_map(|&e| losses.iter().map(move |l| l.delta(e)))
        .collect();
    WeightMatrix {
        n_losses: losses.len(),
        data,
    }
}

/// The w-step: solves `(Σ_i s_i x_i x_iᵀ + αI) w = Σ_i s_i y_i x_i` with `s_i = Σ_k p_ik`.
pub fn update_params(
    ds: &Dataset,
    weights: &WeightMatrix,
    alpha: f64,
) -> Result<Vec<f64>, SolverError> {
    if weights.n_samples() != ds.n_samples() {
        return Err(SolverError::DimensionMismatch {
            expected: ds.n_samples(),
            found: weights.n_samples(),
        });
    }
    let d = ds.n_features();
    let mut gram = SymMatrix::zeros(d);
    let mut rhs = vec![0.0; d];
    for ((x, y), s) in ds.rows().zip(ds.labels()).zip(weights.row_sums()) {
        gram.accumulate_weighted_outer(x, s)?;
        let sy = s * y;
        for (r, xj) in rhs.iter_mut().zip(x) {
            *r += sy * xj;
        }
    }
    Ok(linalg::solve_spd_with_jitter(&gram, &rhs, alpha)?)
}

/// Unweighted ensemble risk `Σ_i Σ_k phi_k(e_i)`.
pub fn objective(ensemble: &EnsembleSpec, w: &[f64], ds: &Dataset) -> Result<f64, SolverError> {
    Ok(risk_of(ensemble, &residuals(w, ds)?))
}

fn risk_of(ensemble: &EnsembleSpec, residuals: &[f64]) -> f64 {
    residuals.iter().map(|&e| ensemble.phi_sum(e)).sum()
}

/// Runs the alternating minimization from `cfg.init` until the relative risk
/// change drops below `cfg.rel_tol` or `cfg.max_iters` is reached.
pub fn fit(
    ds: &Dataset,
    ensemble: &EnsembleSpec,
    cfg: &SolverConfig,
) -> Result<RelfModel, SolverError> {
    cfg.validate()?;
    let mut w = cfg.initial_params(ds.n_features());
    let mut e = residuals(&w, ds)?;
    let initial_risk = risk_of(ensemble, &e);
    if !initial_risk.is_finite() {
        return Err(SolverError::NonFiniteObjective { iteration: 0 });
    }

    let mut iterations = Vec::with_capacity(cfg.max_iters);
    let mut converged = false;
    let mut prev_risk = initial_risk;
    let mut weights = update_weights(ensemble, &e);

    for iteration in 1..=cfg.max_iters {
        if iteration > 1 {
            weights = update_weights(ensemble, &e);
        }
        let next = update_params(ds, &weights, cfg.alpha)?;
        e = residuals(&next, ds)?;
        let risk = risk_of(ensemble, &e);
        if !risk.is_finite() {
            return Err(SolverError::NonFiniteObjective { iteration });
        }
        let max_step = next
            .iter()
            .zip(&w)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        iterations.push(IterationRecord {
            iteration,
            risk,
            max_step,
        });
        w = next;
        if (prev_risk - risk).abs() <= cfg.rel_tol * prev_risk.max(1.0) {
            converged = true;
            break;
        }
        prev_risk = risk;
    }

    Ok(RelfModel {
        w,
        lambda: weights.ensemble_weights(),
        ensemble: ensemble.clone(),
        config: *cfg,
        trace: SolverTrace {
            initial_risk,
            iterations,
            converged,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecreaseRatio {
    pub value: f64,
    /// Set when the risk did not change between the first and final iteration;
    /// `value` is then 1 by convention.
    pub degenerate: bool,
}

/// `(R_1 - R_early) / (R_1 - R_final)` with 1-based iteration indices: the share
/// of the total risk decrease already achieved at iteration `early`.
pub fn decrease_ratio(
    trace: &SolverTrace,
    early: usize,
    final_iter: usize,
) -> Result<DecreaseRatio, SolverError> {
    if early > final_iter {
        return Err(SolverError::TraceIndex {
            index: early,
            len: final_iter,
        });
    }
    let first = trace.risk_at(1)?;
    let at_early = trace.risk_at(early)?;
    let at_final = trace.risk_at(final_iter)?;
    let total = first - at_final;
    if total == 0.0 {
        return Ok(DecreaseRatio {
            value: 1.0,
            degenerate: true,
        });
    }
    Ok(DecreaseRatio {
        value: (first - at_early) / total,
        degenerate: false,
    })
}
