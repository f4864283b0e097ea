//! Regression methods compared by the benchmark: the ensemble solver and its
//! in-repo baselines.

use std::fmt;
use std::str::FromStr;

use crate::data::Dataset;
use crate::linalg::{self, SymMatrix};
use crate::loss::{EnsembleSpec, LossSpec};
use crate::solver::{self, SolverConfig, SolverTrace};

use super::EvalError;

#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    /// Ensemble of losses with learned weights.
    Relf {
        ensemble: EnsembleSpec,
        solver: SolverConfig,
    },
    /// Least squares with an optional ridge penalty `ridge * |w|^2`.
    Ols { ridge: f64 },
    /// Classical IRLS for one M-estimator (the single-loss case of the solver).
    Irls {
        loss: LossSpec,
        solver: SolverConfig,
    },
}

/// Output of fitting a method on one training set.
#[derive(Debug, Clone, PartialEq)]
pub struct Fitted {
    pub w: Vec<f64>,
    pub lambda: Option<Vec<f64>>,
    pub trace: Option<SolverTrace>,
}

impl Method {
    pub fn relf(ensemble: EnsembleSpec) -> Self {
        Method::Relf {
            ensemble,
            solver: SolverConfig::default(),
        }
    }

    pub fn ols() -> Self {
        Method::Ols { ridge: 0.0 }
    }

    pub fn fit(&self, ds: &Dataset) -> Result<Fitted, EvalError> {
        match self {
            Method::Relf { ensemble, solver } => {
                let m = solver::fit(ds, ensemble, solver)?;
                Ok(Fitted {
                    w: m.w,
                    lambda: Some(m.lambda),
                    trace: Some(m.trace),
                })
            }
            Method::Ols { ridge } => Ok(Fitted {
                w: ols_fit(ds, *ridge)?,
                lambda: None,
                trace: None,
            }),
            Method::Irls { loss, solver } => {
                let m = solver::fit(ds, &EnsembleSpec::single(*loss)?, solver)?;
                Ok(Fitted {
                    w: m.w,
                    lambda: None,
                    trace: Some(m.trace),
                })
            }
        }
    }

    /// Same method with every loss scale multiplied by `factor`; baselines without
    /// scales are returned unchanged.
    pub fn rescaled(&self, factor: f64) -> Result<Self, EvalError> {
        Ok(match self {
            Method::Relf { ensemble, solver } => Method::Relf {
                ensemble: ensemble.rescaled(factor)?,
                solver: *solver,
            },
            Method::Irls { loss, solver } => Method::Irls {
                loss: EnsembleSpec::single(*loss)?.rescaled(factor)?.losses()[0],
                solver: *solver,
            },
            Method::Ols { .. } => self.clone(),
        })
    }

    pub fn solver_mut(&mut self) -> Option<&mut SolverConfig> {
        match self {
            Method::Relf { solver, .. } | Method::Irls { solver, .. } => Some(solver),
            Method::Ols { .. } => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Relf { ensemble, .. } => write!(f, "relf:{ensemble}"),
            Method::Ols { ridge } if *ridge == 0.0 => f.write_str("ols"),
            Method::Ols { ridge } => write!(f, "ridge:{ridge}"),
            Method::Irls { loss, .. } => write!(f, "irls:{loss}"),
        }
    }
}

impl FromStr for Method {
    type Err = EvalError;

    /// `relf[:ensemble]`, `ols`, `ridge:<alpha>` or `irls:<loss>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let (head, rest) = match s.split_once(':') {
            Some((h, r)) => (h, Some(r)),
            None => (s, None),
        };
        let invalid = || EvalError::InvalidMethod(s.to_string());
        match (head.to_ascii_lowercase().as_str(), rest) {
            ("relf", None) => Ok(Method::relf(EnsembleSpec::default())),
            ("relf", Some(ens)) => Ok(Method::relf(ens.parse()?)),
            ("ols", None) => Ok(Method::ols()),
            ("ridge", Some(a)) => {
                let ridge: f64 = a.trim().parse().map_err(|_| invalid())?;
                if !(ridge >= 0.0 && ridge.is_finite()) {
                    return Err(invalid());
                }
                Ok(Method::Ols { ridge })
            }
            ("irls", Some(loss)) => Ok(Method::Irls {
                loss: loss.parse()?,
                solver: SolverConfig::default(),
            }),
            _ => Err(invalid()),
        }
    }
}

/// Minimizes `Σ (y_i - w·x_i)^2 + ridge * |w|^2`. A zero ridge is raised to the
/// minimum jitter so rank-deficient designs still solve.
pub fn ols_fit(ds: &Dataset, ridge: f64) -> Result<Vec<f64>, EvalError> {
    let d = ds.n_features();
    let gram = SymMatrix::gram(ds.features(), d);
    let mut rhs = vec![0.0; d];
    for (x, y) in ds.rows().zip(ds.labels()) {
        for (r, xj) in rhs.iter_mut().zip(x) {
            *r += y * xj;
        }
    }
    linalg::solve_spd_with_jitter(&gram, &rhs, ridge).map_err(|e| EvalError::Solver(e.into()))
}
