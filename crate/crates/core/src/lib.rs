//! Robust linear regression with a learned ensemble of M-estimator losses.
//!
//! The model `y ≈ w·x` is fitted by minimizing `Σ_i Σ_k phi_k(y_i - w·x_i)` over
//! a small catalog of base losses ([`loss`]) with alternating half-quadratic
//! steps ([`solver`]). The per-loss share of the final auxiliary weights gives
//! the ensemble weights `λ`. [`eval`] holds the metrics, cross-validation and
//! contamination benchmark used to compare against least-squares and
//! single-loss IRLS baselines.
//!
//! ```
//! use relf_core::data::{synth_line, NoiseConfig, ToyConfig};
//! use relf_core::solver::{fit, SolverConfig};
//!
//! let ds = synth_line(&ToyConfig { noise: NoiseConfig::gaussian(1.0, 7) }).unwrap();
//! let model = fit(&ds, &"welsch:1.5,l1l2".parse().unwrap(), &SolverConfig::default()).unwrap();
//! assert!((model.w[0] - 2.0).abs() < 0.05);
//! assert!((model.lambda.iter().sum::<f64>() - 1.0).abs() < 1e-12);
//! ```

pub mod data;
pub mod eval;
pub mod linalg;
pub mod loss;
pub mod model;
pub mod solver;

pub use data::Dataset;
pub use loss::{EnsembleSpec, LossKind, LossSpec};
pub use model::ModelDocument;
pub use solver::{fit, RelfModel, SolverConfig};
