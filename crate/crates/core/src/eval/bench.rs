//! Dataset × method × contamination benchmark driven by a TOML manifest.
//!
//! ```toml
//! seed = 7                  # fold shuffling and outlier seeds
//! folds = 10
//! contamination = [0.0, 0.1, 0.3]
//! outlier_magnitude = 5.0   # multiples of the training label range
//!
//! [[dataset]]
//! name = "airfoil"
//! format = "csv"            # csv | libsvm | toy
//! path = "airfoil.csv"      # relative to the manifest
//! label = "last"            # column index, header name or "last"
//!
//! [[dataset]]
//! name = "line"
//! format = "toy"
//! noise_std = 1.0
//!
//! [[method]]
//! kind = "relf"             # relf | ols | ridge | irls
//! ensemble = "welsch,l1l2,huber"
//! scale_grid = [0.5, 1.0, 2.0]
//!
//! [[method]]
//! kind = "ols"
//! ```
//!
//! Every contamination level is paired with the clean (0.0) run of the same
//! dataset and method; both use the same fold split.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{
    load_csv, load_libsvm, synth_line, Dataset, LabelColumn, NoiseConfig, ToyConfig,
};
use crate::loss::{EnsembleSpec, LossSpec};
use crate::solver::{Init, SolverConfig};

use super::cv::{cross_validate, CvConfig, CvResult, FoldResult, Preprocess};
use super::metrics::increase_ratio;
use super::{EvalError, Method};

pub const REPORT_FORMAT: &str = "relf-report";
pub const REPORT_VERSION: u32 = 1;

fn default_folds() -> usize {
    10
}
fn default_true() -> bool {
    true
}
fn default_levels() -> Vec<f64> {
    vec![0.0, 0.1]
}
fn default_magnitude() -> f64 {
    5.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_true")]
    pub shuffle: bool,
    #[serde(default = "default_levels")]
    pub contamination: Vec<f64>,
    #[serde(default = "default_magnitude")]
    pub outlier_magnitude: f64,
    #[serde(default, rename = "dataset")]
    pub datasets: Vec<DatasetEntry>,
    #[serde(default, rename = "method")]
    pub methods: Vec<MethodEntry>,
}

impl Default for Manifest {
    fn default() -> Self {
        Manifest {
            seed: 0,
            folds: default_folds(),
            shuffle: true,
            contamination: default_levels(),
            outlier_magnitude: default_magnitude(),
            datasets: Vec::new(),
            methods: Vec::new(),
        }
    }
}

impl Manifest {
    pub fn from_toml(text: &str) -> Result<Self, EvalError> {
        let manifest: Manifest =
            toml::from_str(text).map_err(|e| EvalError::Manifest(e.to_string()))?;
        if manifest.folds < 2 {
            return Err(EvalError::Manifest(format!(
                "folds must be at least 2, got {}",
                manifest.folds
            )));
        }
        if let Some(bad) = manifest
            .contamination
            .iter()
            .find(|f| !(0.0..=1.0).contains(*f))
        {
            return Err(EvalError::Manifest(format!(
                "contamination level {bad} outside [0, 1]"
            )));
        }
        Ok(manifest)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, EvalError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    /// Fails for values TOML cannot hold, such as seeds above `i64::MAX`.
    pub fn to_toml(&self) -> Result<String, EvalError> {
        toml::to_string(self).map_err(|e| EvalError::Manifest(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    Csv,
    Libsvm,
    Toy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub name: String,
    pub format: DatasetFormat,
    #[serde(default)]
    pub path: Option<PathBuf>,
    /// CSV label column; defaults to the last column.
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default = "default_true")]
    pub header: bool,
    /// Defaults to true for file datasets and false for the toy line.
    #[serde(default)]
    pub intercept: Option<bool>,
    #[serde(default)]
    pub normalize: Option<bool>,
    #[serde(default)]
    pub scale_labels: bool,
    /// Toy only: Gaussian label noise.
    #[serde(default)]
    pub noise_std: Option<f64>,
    #[serde(default)]
    pub toy_seed: Option<u64>,
}

impl DatasetEntry {
    fn preprocess(&self) -> Preprocess {
        let file = self.format != DatasetFormat::Toy;
        Preprocess {
            normalize_features: self.normalize.unwrap_or(file),
            scale_labels: self.scale_labels,
            intercept: self.intercept.unwrap_or(file),
        }
    }

    fn load(&self, base: &Path) -> Result<Dataset, EvalError> {
        let path = || {
            self.path
                .as_ref()
                .map(|p| base.join(p))
                .ok_or_else(|| EvalError::Manifest(format!("dataset `{}` needs a path", self.name)))
        };
        Ok(match self.format {
            DatasetFormat::Csv => {
                let label: LabelColumn = self
                    .label
                    .as_deref()
                    .unwrap_or("last")
                    .parse()
                    .unwrap_or(LabelColumn::Last);
                load_csv(path()?, &label, self.header)?
            }
            DatasetFormat::Libsvm => load_libsvm(path()?)?,
            DatasetFormat::Toy => synth_line(&ToyConfig {
                noise: match self.noise_std {
                    Some(std) => NoiseConfig::gaussian(std, self.toy_seed.unwrap_or(0)),
                    None => NoiseConfig::clean(),
                },
            })?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodEntry {
    /// `relf`, `ols`, `ridge` or `irls`.
    pub kind: String,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub ensemble: Option<String>,
    #[serde(default)]
    pub loss: Option<String>,
    #[serde(default)]
    pub ridge: Option<f64>,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub max_iters: Option<usize>,
    #[serde(default)]
    pub rel_tol: Option<f64>,
    #[serde(default)]
    pub init_seed: Option<u64>,
    #[serde(default)]
    pub init_std: Option<f64>,
    /// One variant per factor, each multiplying every loss scale.
    #[serde(default)]
    pub scale_grid: Vec<f64>,
}

impl MethodEntry {
    pub fn new(kind: &str) -> Self {
        MethodEntry {
            kind: kind.to_string(),
            name: None,
            ensemble: None,
            loss: None,
            ridge: None,
            alpha: None,
            max_iters: None,
            rel_tol: None,
            init_seed: None,
            init_std: None,
            scale_grid: Vec::new(),
        }
    }

    fn solver(&self) -> SolverConfig {
        let d = SolverConfig::default();
        SolverConfig {
            alpha: self.alpha.unwrap_or(d.alpha),
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            rel_tol: self.rel_tol.unwrap_or(d.rel_tol),
            init: match self.init_seed {
                Some(seed) => Init::Gaussian {
                    seed,
                    std: self.init_std.unwrap_or(1.0),
                },
                None => Init::Zeros,
            },
        }
    }

    fn base_method(&self) -> Result<Method, EvalError> {
        let solver = self.solver();
        solver.validate()?;
        match self.kind.to_ascii_lowercase().as_str() {
            "relf" => {
                let ensemble = match &self.ensemble {
                    Some(s) => s.parse()?,
                    None => EnsembleSpec::default(),
                };
                Ok(Method::Relf { ensemble, solver })
            }
            "ols" | "ridge" => {
                let ridge = self.ridge.unwrap_or(0.0);
                if !(ridge >= 0.0 && ridge.is_finite()) {
                    return Err(EvalError::InvalidMethod(format!("ridge {ridge}")));
                }
                Ok(Method::Ols { ridge })
            }
            "irls" => {
                let loss: LossSpec = self
                    .loss
                    .as_deref()
                    .ok_or_else(|| EvalError::InvalidMethod("irls needs a `loss`".into()))?
                    .parse()?;
                loss.validate()?;
                Ok(Method::Irls { loss, solver })
            }
            other => Err(EvalError::InvalidMethod(other.to_string())),
        }
    }

    /// Expands the scale grid into named method variants.
    pub fn variants(&self) -> Result<Vec<(String, Method)>, EvalError> {
        let base = self.base_method()?;
        let label = self.name.clone().unwrap_or_else(|| base.to_string());
        if self.scale_grid.is_empty() {
            return Ok(vec![(label, base)]);
        }
        self.scale_grid
            .iter()
            .map(|&f| {
                if !(f > 0.0 && f.is_finite()) {
                    return Err(EvalError::InvalidMethod(format!("scale factor {f}")));
                }
                Ok((format!("{label}@{f}"), base.rescaled(f)?))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "state")]
pub enum CellStatus {
    Ok,
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub dataset: String,
    pub method: String,
    pub contamination: f64,
    pub status: CellStatus,
    pub folds: Vec<FoldResult>,
    pub mean_mae: Option<f64>,
    pub std_mae: Option<f64>,
    pub mean_rmse: Option<f64>,
    pub std_rmse: Option<f64>,
    pub decrease_ratio: Option<f64>,
    pub mean_lambda: Option<Vec<f64>>,
    /// Informational wall-clock time; excluded from the CSV table.
    pub seconds: f64,
}

impl CellReport {
    fn new(
        dataset: &str,
        method: &str,
        contamination: f64,
        outcome: Result<CvResult, EvalError>,
        seconds: f64,
    ) -> Self {
        let mut cell = CellReport {
            dataset: dataset.to_string(),
            method: method.to_string(),
            contamination,
            status: CellStatus::Ok,
            folds: Vec::new(),
            mean_mae: None,
            std_mae: None,
            mean_rmse: None,
            std_rmse: None,
            decrease_ratio: None,
            mean_lambda: None,
            seconds,
        };
        match outcome {
            Ok(cv) => {
                cell.mean_mae = Some(cv.mean_mae);
                cell.std_mae = Some(cv.std_mae);
                cell.mean_rmse = Some(cv.mean_rmse);
                cell.std_rmse = Some(cv.std_rmse);
                cell.decrease_ratio = cv.mean_decrease_ratio();
                cell.mean_lambda = cv.mean_lambda();
                cell.folds = cv.folds;
            }
            Err(e) => {
                cell.status = CellStatus::Failed {
                    error: e.to_string(),
                }
            }
        }
        cell
    }

    pub fn is_ok(&self) -> bool {
        self.status == CellStatus::Ok
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncreaseRatioEntry {
    pub dataset: String,
    pub method: String,
    pub contamination: f64,
    pub ratio: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub format: String,
    pub version: u32,
    /// The manifest as resolved, including defaults.
    pub manifest: Manifest,
    pub cells: Vec<CellReport>,
    pub increase_ratios: Vec<IncreaseRatioEntry>,
}

impl EvalReport {
    pub fn all_ok(&self) -> bool {
        self.cells.iter().all(CellReport::is_ok)
    }

    pub fn failed_cells(&self) -> usize {
        self.cells.iter().filter(|c| !c.is_ok()).count()
    }

    pub fn cell(&self, dataset: &str, method: &str, contamination: f64) -> Option<&CellReport> {
        self.cells.iter().find(|c| {
            c.dataset == dataset && c.method == method && c.contamination == contamination
        })
    }

    /// Flat table, one row per cell. Deterministic for a fixed manifest.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "dataset",
            "method",
            "contamination",
            "status",
            "mean_mae",
            "std_mae",
            "mean_rmse",
            "std_rmse",
            "decrease_ratio",
            "increase_ratio",
            "lambda",
        ])
        .expect("in-memory write");
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for c in &self.cells {
            let ratio = self
                .increase_ratios
                .iter()
                .find(|r| {
                    r.dataset == c.dataset
                        && r.method == c.method
                        && r.contamination == c.contamination
                })
                .and_then(|r| r.ratio);
            let status = match &c.status {
                CellStatus::Ok => "ok".to_string(),
                CellStatus::Failed { error } => format!("failed: {error}"),
            };
            let lambda = c
                .mean_lambda
                .as_ref()
                .map(|l| l.iter().map(f64::to_string).collect::<Vec<_>>().join(";"))
                .unwrap_or_default();
            w.write_record([
                c.dataset.clone(),
                c.method.clone(),
                c.contamination.to_string(),
                status,
                opt(c.mean_mae),
                opt(c.std_mae),
                opt(c.mean_rmse),
                opt(c.std_rmse),
                opt(c.decrease_ratio),
                opt(ratio),
                lambda,
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is always serializable")
    }
}

/// Writes `report.json` and `results.csv` into `dir`, creating it if needed.
pub fn write_report(report: &EvalReport, dir: impl AsRef<Path>) -> Result<(), EvalError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("report.json"), report.to_json() + "\n")?;
    std::fs::write(dir.join("results.csv"), report.to_csv())?;
    Ok(())
}

/// Runs every dataset × method × contamination cell. Cell failures are recorded
/// in the report and do not stop the run. Relative dataset paths resolve against
/// `base_dir`.
pub fn run_benchmark(manifest: &Manifest, base_dir: impl AsRef<Path>) -> EvalReport {
    let base_dir = base_dir.as_ref();
    let mut resolved = manifest.clone();
    let mut levels = vec![0.0];
    for &l in &manifest.contamination {
        if !levels.contains(&l) {
            levels.push(l);
        }
    }
    resolved.contamination = levels.clone();

    let cv = CvConfig {
        folds: manifest.folds,
        seed: manifest.seed,
        shuffle: manifest.shuffle,
    };

    let methods: Vec<Result<Vec<(String, Method)>, String>> = manifest
        .methods
        .iter()
        .map(|m| m.variants().map_err(|e| e.to_string()))
        .collect();

    let mut cells = Vec::new();
    let mut ratios = Vec::new();
    for entry in &manifest.datasets {
        let data = entry.load(base_dir).map_err(|e| e.to_string());
        let prep = entry.preprocess();
        for (entry_idx, variants) in methods.iter().enumerate() {
            let variants = match variants {
                Ok(v) => v.clone(),
                Err(e) => {
                    let label = manifest.methods[entry_idx]
                        .name
                        .clone()
                        .unwrap_or_else(|| manifest.methods[entry_idx].kind.clone());
                    for &level in &levels {
                        cells.push(CellReport::new(
                            &entry.name,
                            &label,
                            level,
                            Err(EvalError::InvalidMethod(e.clone())),
                            0.0,
                        ));
                    }
                    continue;
                }
            };
            for (label, method) in variants {
                let mut clean_mae = None;
                for &level in &levels {
                    let start = Instant::now();
                    let outcome = match &data {
                        Err(e) => Err(EvalError::Manifest(format!(
                            "dataset `{}`: {e}",
                            entry.name
                        ))),
                        Ok(ds) => run_cell(ds, &method, &cv, &prep, level, manifest),
                    };
                    let cell = CellReport::new(
                        &entry.name,
                        &label,
                        level,
                        outcome,
                        start.elapsed().as_secs_f64(),
                    );
                    if level == 0.0 {
                        clean_mae = cell.mean_mae;
                    } else {
                        let ratio = match (cell.mean_mae, clean_mae) {
                            (Some(c), Some(k)) => increase_ratio(c, k).map_err(|e| e.to_string()),
                            _ => Err("missing clean or contaminated MAE".to_string()),
                        };
                        ratios.push(IncreaseRatioEntry {
                            dataset: entry.name.clone(),
                            method: label.clone(),
                            contamination: level,
                            ratio: ratio.as_ref().ok().copied(),
                            error: ratio.err(),
                        });
                    }
                    cells.push(cell);
                }
            }
        }
    }

    EvalReport {
        format: REPORT_FORMAT.to_string(),
        version: REPORT_VERSION,
        manifest: resolved,
        cells,
        increase_ratios: ratios,
    }
}

fn run_cell(
    ds: &Dataset,
    method: &Method,
    cv: &CvConfig,
    prep: &Preprocess,
    level: f64,
    manifest: &Manifest,
) -> Result<CvResult, EvalError> {
    if level == 0.0 {
        return cross_validate(ds, method, cv, prep, None);
    }
    let noise = NoiseConfig::outliers(level, manifest.outlier_magnitude, manifest.seed);
    noise.validate()?;
    cross_validate(ds, method, cv, prep, Some(&noise))
}
