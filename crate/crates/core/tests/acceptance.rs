//! Acceptance suite. Prints one `[PASS]`/`[FAIL]` line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::time::Instant;

use common::{fd_delta, irls_oracle, max_abs_diff, ols_oracle, random_dataset, report};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use relf_core::data::{synth_line, Dataset, NoiseConfig, ToyConfig};
use relf_core::eval::{
    cross_validate, increase_ratio, kfold_split, mae, ols_fit, rmse, CvConfig, Method, Preprocess,
};
use relf_core::loss::{EnsembleSpec, LossKind, LossSpec};
use relf_core::solver::{
    decrease_ratio, fit, update_params, IterationRecord, SolverConfig, SolverTrace, WeightMatrix,
};

const SEEDS: u64 = 20;
/// Toy ensemble: Welsch at scale 1.5 beside the L1-L2 loss.
const TOY_ENSEMBLE: &str = "welsch:1.5,l1l2";
const TOY_OUTLIERS: f64 = 10.0 / 81.0;

fn toy_ensemble() -> EnsembleSpec {
    TOY_ENSEMBLE.parse().unwrap()
}

fn gaussian_toy(seed: u64) -> Dataset {
    synth_line(&ToyConfig {
        noise: NoiseConfig::gaussian(1.0, seed),
    })
    .unwrap()
}

fn outlier_toy(seed: u64) -> Dataset {
    synth_line(&ToyConfig {
        noise: NoiseConfig::outliers(TOY_OUTLIERS, 5.0, seed),
    })
    .unwrap()
}

fn exhaustive(max_iters: usize) -> SolverConfig {
    SolverConfig {
        max_iters,
        rel_tol: f64::MIN_POSITIVE,
        ..SolverConfig::default()
    }
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..n).filter(|i| m & (1 << i) != 0).collect())
        .collect()
}

fn ac1_toy_slope_recovery() -> bool {
    let start = Instant::now();
    let slopes: Vec<f64> = (0..SEEDS)
        .map(|s| {
            fit(&gaussian_toy(s), &toy_ensemble(), &SolverConfig::default())
                .unwrap()
                .w[0]
        })
        .collect();
    let elapsed = start.elapsed().as_secs_f64();
    let worst = slopes.iter().fold(0.0f64, |m, w| m.max((w - 2.0).abs()));
    let inside = slopes.iter().filter(|w| (*w - 2.0).abs() <= 0.02).count();
    let ols_inside = (0..SEEDS)
        .filter(|&s| (ols_fit(&gaussian_toy(s), 0.0).unwrap()[0] - 2.0).abs() <= 0.02)
        .count();
    let ok = report(
        "AC1",
        inside == SEEDS as usize && elapsed < 1.0,
        format!("toy slope within 2 +/- 0.02 in {inside}/{SEEDS} seeds (worst |w-2| = {worst:.4}; OLS reference {ols_inside}/{SEEDS}), {elapsed:.3}s"),
    );
    if !ok {
        println!("    slopes: {slopes:?}");
    }
    ok
}

fn ac2_lambda_ordering() -> bool {
    let ens = toy_ensemble();
    let cfg = SolverConfig::default();
    let mut gaussian_order = 0;
    let mut welsch_rises = 0;
    for s in 0..SEEDS {
        let clean = fit(&gaussian_toy(s), &ens, &cfg).unwrap().lambda;
        let dirty = fit(&outlier_toy(s), &ens, &cfg).unwrap().lambda;
        gaussian_order += usize::from(clean[1] > clean[0]);
        welsch_rises += usize::from(dirty[0] > clean[0]);
    }
    let a = report(
        "AC2a",
        gaussian_order >= 18,
        format!(
            "lambda_l1l2 > lambda_welsch under Gaussian noise in {gaussian_order}/{SEEDS} seeds"
        ),
    );
    let b = report(
        "AC2b",
        welsch_rises >= 18,
        format!("lambda_welsch rises with 10 outliers in {welsch_rises}/{SEEDS} seeds"),
    );
    a && b
}

fn ac3_monotone_risk() -> bool {
    let mut datasets = vec![gaussian_toy(0)];
    datasets.extend((0..5).map(|s| random_dataset(100 + s, 200, 8, 0.5, 0.1, 10.0)));
    let catalog: Vec<LossSpec> = LossKind::ALL
        .iter()
        .map(|&k| LossSpec::with_default_scale(k))
        .collect();
    let cfg = exhaustive(100);
    let mut runs = 0;
    let mut failures = Vec::new();
    for (d, ds) in datasets.iter().enumerate() {
        for size in [2, 3, 5] {
            for pick in subsets(catalog.len(), size) {
                let ens = EnsembleSpec::new(pick.iter().map(|&i| catalog[i]).collect()).unwrap();
                let model = fit(ds, &ens, &cfg).unwrap();
                runs += 1;
                if !model.trace.is_monotone(1e-10) {
                    failures.push(format!("dataset {d} ensemble {ens}"));
                }
            }
        }
    }
    let ok = report(
        "AC3",
        failures.is_empty(),
        format!(
            "risk non-increasing (slack 1e-10) in {}/{runs} runs",
            runs - failures.len()
        ),
    );
    if !ok {
        println!("    {failures:?}");
    }
    ok
}

fn ac4_decrease_ratio() -> bool {
    let ens = toy_ensemble();
    let cfg = exhaustive(30);
    let mut worst = f64::INFINITY;
    let mut passing = 0;
    for s in 0..SEEDS {
        let model = fit(&gaussian_toy(s), &ens, &cfg).unwrap();
        let r = decrease_ratio(&model.trace, 10, 30).unwrap().value;
        worst = worst.min(r);
        passing += usize::from(r >= 0.85);
    }
    let a = report(
        "AC4a",
        passing == SEEDS as usize,
        format!("toy decrease ratio >= 0.85 in {passing}/{SEEDS} runs (min {worst:.6})"),
    );

    // Airfoil row: R1, R10, R30.
    let mut risks = vec![617.9089; 30];
    risks[1..10].fill(615.2434);
    risks[10..].fill(615.2070);
    let trace = SolverTrace {
        initial_risk: 620.0,
        iterations: risks
            .iter()
            .enumerate()
            .map(|(i, &risk)| IterationRecord {
                iteration: i + 1,
                risk,
                max_step: 0.0,
            })
            .collect(),
        converged: false,
    };
    let r = decrease_ratio(&trace, 10, 30).unwrap().value;
    let b = report(
        "AC4b",
        (r - 0.986528).abs() <= 1e-5,
        format!("Airfoil decrease ratio {r:.6}"),
    );
    a && b
}

fn ac5_increase_ratio_ordering() -> bool {
    let start = Instant::now();
    let relf = Method::relf(EnsembleSpec::default());
    let ols = Method::ols();
    let mut wins = 0;
    for t in 0..100u64 {
        let ds = gaussian_toy(1000 + t);
        let cv = CvConfig {
            folds: 10,
            seed: t,
            shuffle: true,
        };
        let prep = Preprocess::raw();
        let noise = NoiseConfig::outliers(0.3, 5.0, t);
        let ratio = |m: &Method| {
            let clean = cross_validate(&ds, m, &cv, &prep, None).unwrap().mean_mae;
            let dirty = cross_validate(&ds, m, &cv, &prep, Some(&noise))
                .unwrap()
                .mean_mae;
            increase_ratio(dirty, clean).unwrap()
        };
        wins += usize::from(ratio(&relf) < ratio(&ols));
    }
    let elapsed = start.elapsed().as_secs_f64();
    let ok = report(
        "AC5",
        wins >= 95 && elapsed < 30.0,
        format!("increase ratio RELF < OLS in {wins}/100 trials with 30% outliers, {elapsed:.2}s"),
    );
    ok
}

fn ac6_oracle_equivalences() -> bool {
    let mut worst_ols = 0.0f64;
    for seed in 0..10 {
        let ds = random_dataset(seed, 50, 5, 1.0, 0.0, 0.0);
        let ones = WeightMatrix::from_rows(&vec![vec![1.0]; 50]).unwrap();
        let w = update_params(&ds, &ones, 1e-12).unwrap();
        worst_ols = worst_ols.max(max_abs_diff(&w, &ols_oracle(&ds)));
    }
    let a = report(
        "AC6a",
        worst_ols <= 1e-6,
        format!("unit-weight update vs OLS oracle, max diff {worst_ols:.2e}"),
    );

    let ds = random_dataset(7, 100, 3, 0.5, 0.1, 8.0);
    let mut worst_irls = 0.0f64;
    for kind in LossKind::ALL {
        let loss = LossSpec::with_default_scale(kind);
        let model = fit(&ds, &EnsembleSpec::single(loss).unwrap(), &exhaustive(300)).unwrap();
        worst_irls = worst_irls.max(max_abs_diff(&model.w, &irls_oracle(&ds, &loss, 300)));
    }
    let b = report(
        "AC6b",
        worst_irls <= 1e-6,
        format!("single-loss fit vs IRLS oracle, max diff {worst_irls:.2e}"),
    );

    let mut worst_fd = 0.0f64;
    for kind in LossKind::ALL {
        let scales: &[f64] = if kind.uses_scale() {
            &[0.5, 1.0, 2.0]
        } else {
            &[1.0]
        };
        for &scale in scales {
            let loss = LossSpec::new(kind, scale).unwrap();
            for k in -100..=100 {
                if k == 0 {
                    continue;
                }
                let e = f64::from(k) * 0.1;
                worst_fd = worst_fd.max((loss.delta(e) - fd_delta(&loss, e, 1e-6)).abs());
            }
        }
    }
    let c = report(
        "AC6c",
        worst_fd <= 1e-5,
        format!("delta vs finite-difference phi'/e, max diff {worst_fd:.2e}"),
    );
    a && b && c
}

fn ac7_property_suites() -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(77);

    // simplex
    let mut simplex_ok = true;
    for s in 0..SEEDS {
        for ds in [gaussian_toy(s), outlier_toy(s)] {
            let lambda = fit(&ds, &EnsembleSpec::default(), &SolverConfig::default())
                .unwrap()
                .lambda;
            let sum: f64 = lambda.iter().sum();
            simplex_ok &= (sum - 1.0).abs() <= 1e-12 && lambda.iter().all(|&l| l >= 0.0);
        }
    }
    let a = report("AC7a", simplex_ok, "lambda on the simplex for 40 fits");

    // sample and loss permutation, compared at equal iteration counts
    let ds = random_dataset(3, 120, 4, 0.5, 0.15, 6.0);
    let ens = EnsembleSpec::default();
    let mut order: Vec<usize> = (0..ds.n_samples()).collect();
    order.reverse();
    order.rotate_left(37);
    let permuted = ds.subset(&order).unwrap();
    let reversed = EnsembleSpec::new(ens.losses().iter().rev().copied().collect()).unwrap();
    let (mut sample_diff, mut loss_diff) = (0.0f64, 0.0f64);
    for iters in [1, 5, 10] {
        let cfg = exhaustive(iters);
        let base = fit(&ds, &ens, &cfg).unwrap();
        let shuffled = fit(&permuted, &ens, &cfg).unwrap();
        let swapped = fit(&ds, &reversed, &cfg).unwrap();
        assert!([&base, &shuffled, &swapped]
            .iter()
            .all(|m| m.iterations() == iters));
        let mut swapped_lambda = swapped.lambda.clone();
        swapped_lambda.reverse();
        sample_diff = sample_diff
            .max(max_abs_diff(&base.w, &shuffled.w))
            .max(max_abs_diff(&base.lambda, &shuffled.lambda));
        loss_diff = loss_diff
            .max(max_abs_diff(&base.w, &swapped.w))
            .max(max_abs_diff(&base.lambda, &swapped_lambda));
    }
    let b = report(
        "AC7b",
        sample_diff <= 1e-10 && loss_diff <= 1e-10,
        format!("permutation invariance, sample diff {sample_diff:.2e}, loss diff {loss_diff:.2e}"),
    );

    // kfold partition
    let mut partition_ok = true;
    for n in [10, 11, 37, 100] {
        for folds in [2, 3, 5, 10] {
            let cv = CvConfig {
                folds,
                seed: n as u64,
                shuffle: true,
            };
            let splits = kfold_split(n, &cv).unwrap();
            let mut seen = vec![0; n];
            for f in &splits {
                for &i in &f.test {
                    seen[i] += 1;
                }
                partition_ok &= f.train.len() + f.test.len() == n
                    && f.train.iter().all(|i| !f.test.contains(i));
            }
            partition_ok &= seen.iter().all(|&c| c == 1);
            let sizes: Vec<usize> = splits.iter().map(|f| f.test.len()).collect();
            partition_ok &= sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1;
        }
    }
    let c = report(
        "AC7c",
        partition_ok,
        "k-fold test sets partition the samples",
    );

    // mae <= rmse
    let normal = Normal::new(0.0, 3.0).unwrap();
    let mut metric_ok = true;
    for _ in 0..1000 {
        let n = rng.random_range(1..50);
        let y: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
        let p: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
        metric_ok &= mae(&y, &p).unwrap() <= rmse(&y, &p).unwrap() * (1.0 + 1e-12);
    }
    let d = report("AC7d", metric_ok, "mae <= rmse on 1000 random vectors");

    // betweenness
    let convex: Vec<LossSpec> = LossKind::ALL
        .iter()
        .filter(|k| k.is_convex())
        .map(|&k| LossSpec::with_default_scale(k))
        .collect();
    let step = 1e-3;
    let mut between_ok = true;
    let mut checked = 0;
    for a_loss in &convex {
        for b_loss in &convex {
            for (u, v) in [(-1.0, 2.0), (0.5, 3.0), (-4.0, -1.5)] {
                for l1 in [0.1, 0.5, 0.9] {
                    let f = |z: f64| l1 * a_loss.phi(z - u) + (1.0 - l1) * b_loss.phi(z - v);
                    let (lo, hi) = (f64::min(u, v), f64::max(u, v));
                    let argmin = (0..=((hi - lo + 10.0) / step) as usize)
                        .map(|i| lo - 5.0 + i as f64 * step)
                        .min_by(|x, y| f(*x).total_cmp(&f(*y)))
                        .unwrap();
                    between_ok &= argmin >= lo - step && argmin <= hi + step;
                    checked += 1;
                }
            }
        }
    }
    let e = report(
        "AC7e",
        between_ok,
        format!("mixture minimizer between the shifts in {checked} cases"),
    );
    a && b && c && d && e
}

type Criterion = (&'static str, fn() -> bool);

fn main() {
    let criteria: [Criterion; 7] = [
        ("AC1", ac1_toy_slope_recovery),
        ("AC2", ac2_lambda_ordering),
        ("AC3", ac3_monotone_risk),
        ("AC4", ac4_decrease_ratio),
        ("AC5", ac5_increase_ratio_ordering),
        ("AC6", ac6_oracle_equivalences),
        ("AC7", ac7_property_suites),
    ];
    let failed: Vec<&str> = criteria
        .iter()
        .filter(|(_, run)| !run())
        .map(|(id, _)| *id)
        .collect();
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
    } else {
        println!("acceptance: failed {}", failed.join(", "));
        std::process::exit(1);
    }
}
