//! Test-only oracles, kept independent of the library's solve paths.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use relf_core::data::Dataset;
use relf_core::loss::{LossKind, LossSpec};

/// Dense Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            let (upper, lower) = a.split_at_mut(row);
            for (r, p) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *r -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

/// Solves `(Σ ω_i x_i x_iᵀ) w = Σ ω_i y_i x_i` by elimination.
pub fn weighted_normal_equations(ds: &Dataset, weights: &[f64]) -> Vec<f64> {
    let d = ds.n_features();
    let mut a = vec![vec![0.0; d]; d];
    let mut b = vec![0.0; d];
    for ((x, y), w) in ds.rows().zip(ds.labels()).zip(weights) {
        for i in 0..d {
            b[i] += w * y * x[i];
            for j in 0..d {
                a[i][j] += w * x[i] * x[j];
            }
        }
    }
    gauss_solve(a, b)
}

pub fn ols_oracle(ds: &Dataset) -> Vec<f64> {
    weighted_normal_equations(ds, &vec![1.0; ds.n_samples()])
}

/// Influence function `psi(e) = phi'(e)`, written out per kind.
pub fn psi(loss: &LossSpec, e: f64) -> f64 {
    let s = loss.scale;
    match loss.kind {
        LossKind::Welsch => 2.0 * e / (s * s) * (-e * e / (s * s)).exp(),
        LossKind::L1L2 => e / (1.0 + e * e).sqrt(),
        LossKind::Huber => {
            if e.abs() < 2.0 * s {
                e / (2.0 * s)
            } else {
                e.signum()
            }
        }
        LossKind::Fair => s * e / (s + e.abs()),
        LossKind::LogCosh => e.tanh(),
    }
}

/// IRLS weight `psi(e)/e`, with the limit at zero taken from a tiny residual.
pub fn irls_weight(loss: &LossSpec, e: f64) -> f64 {
    let e = if e.abs() < 1e-300 { 1e-300 } else { e };
    let w = psi(loss, e) / e;
    if w.is_finite() {
        w
    } else {
        psi(loss, 1e-150) / 1e-150
    }
}

/// Classical single-loss IRLS from `w = 0` for a fixed number of iterations.
pub fn irls_oracle(ds: &Dataset, loss: &LossSpec, iterations: usize) -> Vec<f64> {
    let mut w = vec![0.0; ds.n_features()];
    for _ in 0..iterations {
        let weights: Vec<f64> = ds
            .rows()
            .zip(ds.labels())
            .map(|(x, y)| {
                let e = y - x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
                irls_weight(loss, e)
            })
            .collect();
        w = weighted_normal_equations(ds, &weights);
    }
    w
}

/// Central-difference `phi'(e)/e` with step `h`.
pub fn fd_delta(loss: &LossSpec, e: f64, h: f64) -> f64 {
    (loss.phi(e + h) - loss.phi(e - h)) / (2.0 * h * e)
}

/// Gaussian design, `y = X w* + N(0, noise)`, with a fraction of labels shifted by ±`jump`.
pub fn random_dataset(
    seed: u64,
    n: usize,
    d: usize,
    noise: f64,
    outlier_fraction: f64,
    jump: f64,
) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std = Normal::new(0.0, 1.0).unwrap();
    let truth: Vec<f64> = (0..d).map(|_| std.sample(&mut rng)).collect();
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let x: Vec<f64> = (0..d).map(|_| std.sample(&mut rng)).collect();
        let mut y: f64 =
            x.iter().zip(&truth).map(|(a, b)| a * b).sum::<f64>() + noise * std.sample(&mut rng);
        if rng.random::<f64>() < outlier_fraction {
            y += if rng.random_bool(0.5) { jump } else { -jump };
        }
        rows.push(x);
        labels.push(y);
    }
    Dataset::from_rows(rows, labels).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Prints one acceptance line and returns the verdict.
pub fn report(id: &str, passed: bool, detail: impl AsRef<str>) -> bool {
    println!(
        "[{}] {id}: {}",
        if passed { "PASS" } else { "FAIL" },
        detail.as_ref()
    );
    passed
}
