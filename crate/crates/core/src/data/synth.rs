//! Synthetic line data and label contamination.
//!
//! All randomness comes from ChaCha8 seeded with `seed_from_u64`, so a seed
//! reproduces the same dataset on every platform.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{DataError, Dataset};

/// Slope of the synthetic line `y = 2 x + z`.
pub const TOY_SLOPE: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    /// No label noise.
    Clean,
    /// Zero-mean Gaussian noise added to every label.
    GaussianLabel,
    /// A fraction of labels displaced by a large random-sign offset.
    OutlierLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub mode: NoiseMode,
    pub gaussian_std: f64,
    pub outlier_fraction: f64,
    /// Outlier displacement in multiples of the label range.
    pub outlier_magnitude: f64,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            mode: NoiseMode::GaussianLabel,
            gaussian_std: 1.0,
            outlier_fraction: 0.3,
            outlier_magnitude: 5.0,
            seed: 0,
        }
    }
}

impl NoiseConfig {
    pub fn clean() -> Self {
        NoiseConfig {
            mode: NoiseMode::Clean,
            ..Self::default()
        }
    }

    pub fn gaussian(std: f64, seed: u64) -> Self {
        NoiseConfig {
            mode: NoiseMode::GaussianLabel,
            gaussian_std: std,
            seed,
            ..Self::default()
        }
    }

    pub fn outliers(fraction: f64, magnitude: f64, seed: u64) -> Self {
        NoiseConfig {
            mode: NoiseMode::OutlierLabel,
            outlier_fraction: fraction,
            outlier_magnitude: magnitude,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if !(0.0..=1.0).contains(&self.outlier_fraction) {
            return Err(DataError::FractionOutOfRange(self.outlier_fraction));
        }
        if !(self.gaussian_std > 0.0 && self.gaussian_std.is_finite()) {
            return Err(DataError::InvalidNoise(format!(
                "gaussian_std must be positive, got {}",
                self.gaussian_std
            )));
        }
        if !(self.outlier_magnitude > 0.0 && self.outlier_magnitude.is_finite()) {
            return Err(DataError::InvalidNoise(format!(
                "outlier_magnitude must be positive, got {}",
                self.outlier_magnitude
            )));
        }
        Ok(())
    }

    /// Number of labels an outlier injection alters on `n` samples.
    pub fn outlier_count(&self, n: usize) -> usize {
        ((self.outlier_fraction * n as f64).round() as usize).min(n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ToyConfig {
    pub noise: NoiseConfig,
}

/// Inputs `-20, -19.5, ..., 20` (81 samples).
pub fn toy_grid() -> Vec<f64> {
    (-40..=40).map(|k| f64::from(k) * 0.5).collect()
}

/// The one-feature line `y = 2 x + z` on [`toy_grid`], with `z` drawn per `config.noise`.
/// No intercept column is added.
pub fn synth_line(config: &ToyConfig) -> Result<Dataset, DataError> {
    let noise = &config.noise;
    noise.validate()?;
    let x = toy_grid();
    let mut y: Vec<f64> = x.iter().map(|v| TOY_SLOPE * v).collect();
    if noise.mode == NoiseMode::GaussianLabel {
        let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
        let normal = Normal::new(0.0, noise.gaussian_std)
            .map_err(|e| DataError::InvalidNoise(e.to_string()))?;
        for yi in &mut y {
            *yi += normal.sample(&mut rng);
        }
    }
    let ds = Dataset::from_column(&x, y)?;
    match noise.mode {
        NoiseMode::OutlierLabel => inject_outliers(&ds, noise),
        _ => Ok(ds),
    }
}

/// Replaces `round(fraction * n)` distinct labels with `y + s * magnitude * range(y)`,
/// `s` uniform on `{-1, +1}`. Features are untouched. A constant label vector uses
/// a unit range.
pub fn inject_outliers(ds: &Dataset, noise: &NoiseConfig) -> Result<Dataset, DataError> {
    if noise.mode != NoiseMode::OutlierLabel {
        return Err(DataError::InvalidNoise(format!(
            "outlier injection requires outlier_label mode, got {:?}",
            noise.mode
        )));
    }
    noise.validate()?;
    let n = ds.n_samples();
    let count = noise.outlier_count(n);
    if count == 0 {
        return Ok(ds.clone());
    }
    let (lo, hi) = ds
        .labels()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let range = if hi > lo { hi - lo } else { 1.0 };
    let offset = noise.outlier_magnitude * range;

    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let picked = index::sample(&mut rng, n, count);
    let mut labels = ds.labels().to_vec();
    for i in picked.iter() {
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        labels[i] += sign * offset;
    }
    ds.with_labels(labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_shape() {
        let ds = synth_line(&ToyConfig {
            noise: NoiseConfig::clean(),
        })
        .unwrap();
        assert_eq!(ds.n_samples(), 81);
        assert_eq!(ds.n_features(), 1);
        assert_eq!(ds.row(0), &[-20.0]);
        assert_eq!(ds.row(80), &[20.0]);
        assert_eq!(ds.labels()[0], -40.0);
        assert!(!ds.has_intercept());
    }

    #[test]
    fn gaussian_is_seeded() {
        let cfg = ToyConfig {
            noise: NoiseConfig::gaussian(1.0, 42),
        };
        let a = synth_line(&cfg).unwrap();
        let b = synth_line(&cfg).unwrap();
        assert_eq!(a, b);
        let c = synth_line(&ToyConfig {
            noise: NoiseConfig::gaussian(1.0, 43),
        })
        .unwrap();
        assert_ne!(a.labels(), c.labels());
    }

    #[test]
    fn outlier_counts() {
        let ds = Dataset::from_column(&[1.0; 10], (0..10).map(f64::from).collect()).unwrap();
        let same = inject_outliers(&ds, &NoiseConfig::outliers(0.0, 5.0, 1)).unwrap();
        assert_eq!(same, ds);

        let cfg = NoiseConfig::outliers(0.3, 5.0, 9);
        let dirty = inject_outliers(&ds, &cfg).unwrap();
        let changed = ds
            .labels()
            .iter()
            .zip(dirty.labels())
            .filter(|(a, b)| a != b)
            .count();
        assert_eq!(changed, 3);
        assert_eq!(dirty.features(), ds.features());
        for (a, b) in ds.labels().iter().zip(dirty.labels()) {
            if a != b {
                assert_eq!((a - b).abs(), 45.0);
            }
        }
        assert_eq!(inject_outliers(&ds, &cfg).unwrap(), dirty);
    }

    #[test]
    fn outlier_errors() {
        let ds = Dataset::from_column(&[1.0], vec![1.0]).unwrap();
        assert!(matches!(
            inject_outliers(&ds, &NoiseConfig::outliers(1.5, 5.0, 0)),
            Err(DataError::FractionOutOfRange(_))
        ));
        assert!(matches!(
            inject_outliers(&ds, &NoiseConfig::gaussian(1.0, 0)),
            Err(DataError::InvalidNoise(_))
        ));
    }

    #[test]
    fn ten_of_eighty_one() {
        let cfg = NoiseConfig::outliers(10.0 / 81.0, 5.0, 3);
        assert_eq!(cfg.outlier_count(81), 10);
    }
}
