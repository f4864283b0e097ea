//! `relf`: fit, apply and benchmark robust linear regressors built from an
//! ensemble of M-estimator losses.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use relf_core::data::{
    inject_outliers, load_csv, load_libsvm, synth_line, Dataset, LabelColumn, NoiseConfig,
    ToyConfig,
};
use relf_core::eval::{mae, rmse, run_benchmark, write_report, Manifest, Preprocess};
use relf_core::solver::{decrease_ratio, fit, predict, Init, SolverConfig, SolverError};
use relf_core::{EnsembleSpec, ModelDocument};

const TOY_ENSEMBLE: &str = "welsch:1.5,l1l2";

#[derive(Parser)]
#[command(
    name = "relf",
    version,
    about = "Robust regression with a learned ensemble of losses"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model on a CSV or LIBSVM file and save it as JSON.
    Fit(FitArgs),
    /// Apply a saved model to a data file.
    Predict(PredictArgs),
    /// Fit the synthetic line y = 2x + z and print one result row.
    Toy(ToyArgs),
    /// Run a benchmark manifest and write report.json and results.csv.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Libsvm,
}

#[derive(Args)]
struct DataArgs {
    /// Input data file.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// CSV label column: index, header name, `last` or `none`.
    #[arg(long, default_value = "last")]
    label: String,
    /// The CSV file has no header row.
    #[arg(long)]
    no_header: bool,
}

#[derive(Args)]
struct SolverArgs {
    /// Loss ensemble, `kind[:scale](,kind[:scale])*`; defaults to
    /// `welsch,l1l2,huber` (`welsch:1.5,l1l2` for `toy`).
    #[arg(long)]
    ensemble: Option<String>,
    /// Diagonal jitter added to the weighted Gram matrix.
    #[arg(long, default_value = "1e-8")]
    alpha: f64,
    #[arg(long, default_value_t = 30)]
    max_iters: usize,
    /// Relative risk change that stops the iteration.
    #[arg(long, default_value = "1e-8")]
    rel_tol: f64,
    /// Seed for a Gaussian initial point; zeros when absent.
    #[arg(long)]
    init_seed: Option<u64>,
    #[arg(long, default_value_t = 1.0)]
    init_std: f64,
}

impl SolverArgs {
    fn ensemble(&self, default: &str) -> Result<EnsembleSpec, Failure> {
        self.ensemble
            .as_deref()
            .unwrap_or(default)
            .parse()
            .map_err(Failure::input)
    }

    fn config(&self) -> SolverConfig {
        SolverConfig {
            alpha: self.alpha,
            max_iters: self.max_iters,
            rel_tol: self.rel_tol,
            init: match self.init_seed {
                Some(seed) => Init::Gaussian {
                    seed,
                    std: self.init_std,
                },
                None => Init::Zeros,
            },
        }
    }
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Do not append an intercept column.
    #[arg(long)]
    no_intercept: bool,
    /// Map features into [-1, 1] using the training ranges.
    #[arg(long)]
    normalize: bool,
    /// Map labels into [-1, 1]; predictions are mapped back.
    #[arg(long)]
    scale_labels: bool,
    /// Where to write the model JSON.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    /// Model JSON written by `relf fit`.
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Write predictions here, one per line; printed when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ToyNoise {
    Clean,
    Gaussian,
    Outlier,
}

#[derive(Args)]
struct ToyArgs {
    #[arg(long, value_enum, default_value_t = ToyNoise::Gaussian)]
    noise: ToyNoise,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Gaussian noise standard deviation.
    #[arg(long, default_value_t = 1.0)]
    std: f64,
    /// Number of outlier labels in outlier mode.
    #[arg(long, default_value_t = 10)]
    outliers: usize,
    /// Outlier offset in multiples of the label range.
    #[arg(long, default_value_t = 5.0)]
    magnitude: f64,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// TOML manifest; relative dataset paths resolve against its directory.
    #[arg(long)]
    manifest: PathBuf,
    /// Report directory.
    #[arg(long)]
    output: PathBuf,
}

/// An error message with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(e: impl ToString) -> Self {
        Failure {
            code: 1,
            message: e.to_string(),
        }
    }

    fn solver(e: SolverError) -> Self {
        Failure {
            code: if e.is_numerical() { 2 } else { 1 },
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::Fit(a) => cmd_fit(&a),
        Command::Predict(a) => cmd_predict(&a),
        Command::Toy(a) => cmd_toy(&a),
        Command::Bench(a) => cmd_bench(&a),
    };
    match outcome {
        Ok(out) => {
            print!("{}", out.text);
            ExitCode::from(out.code)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

struct Output {
    text: String,
    code: u8,
}

impl Output {
    fn ok(text: String) -> Self {
        Output { text, code: 0 }
    }
}

/// Shortest round-trip form, switching to exponent notation for tiny or huge magnitudes.
fn num(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-4..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(|&v| num(v)).collect::<Vec<_>>().join(",")
}

fn echo_solver(out: &mut String, ens: &EnsembleSpec, cfg: &SolverConfig) {
    let _ = writeln!(out, "ensemble = {ens}");
    let _ = writeln!(out, "alpha = {}", num(cfg.alpha));
    let _ = writeln!(out, "max_iters = {}", cfg.max_iters);
    let _ = writeln!(out, "rel_tol = {}", num(cfg.rel_tol));
    let _ = match cfg.init {
        Init::Zeros => writeln!(out, "init = zeros"),
        Init::Gaussian { seed, std } => writeln!(
            out,
            "init = gaussian\ninit_seed = {seed}\ninit_std = {}",
            num(std)
        ),
    };
}

fn load(args: &DataArgs) -> Result<(Dataset, bool), Failure> {
    match args.format {
        Format::Csv => {
            let label: LabelColumn = args.label.parse().map_err(Failure::input)?;
            let labeled = label != LabelColumn::None;
            Ok((
                load_csv(&args.data, &label, !args.no_header).map_err(Failure::input)?,
                labeled,
            ))
        }
        Format::Libsvm => Ok((load_libsvm(&args.data).map_err(Failure::input)?, true)),
    }
}

fn echo_data(out: &mut String, args: &DataArgs) {
    let _ = writeln!(out, "data = {}", args.data.display());
    let _ = writeln!(
        out,
        "format = {}",
        if args.format == Format::Csv {
            "csv"
        } else {
            "libsvm"
        }
    );
    if args.format == Format::Csv {
        let _ = writeln!(out, "label = {}", args.label);
        let _ = writeln!(out, "header = {}", !args.no_header);
    }
}

fn cmd_fit(args: &FitArgs) -> Result<Output, Failure> {
    let ens = args.solver.ensemble("welsch,l1l2,huber")?;
    let cfg = args.solver.config();
    cfg.validate().map_err(Failure::input)?;
    let (raw, labeled) = load(&args.data)?;
    if !labeled {
        return Err(Failure::input("fitting needs a label column"));
    }

    let mut out = String::from("[config]\ncommand = fit\n");
    echo_data(&mut out, &args.data);
    echo_solver(&mut out, &ens, &cfg);
    let _ = writeln!(out, "intercept = {}", !args.no_intercept);
    let _ = writeln!(out, "normalize = {}", args.normalize);
    let _ = writeln!(out, "scale_labels = {}", args.scale_labels);
    let _ = writeln!(out, "output = {}", args.output.display());

    let prep = Preprocess {
        normalize_features: args.normalize,
        scale_labels: args.scale_labels,
        intercept: !args.no_intercept,
    }
    .fit(&raw);
    let ds = prep.apply(&raw).map_err(Failure::input)?;
    let model = fit(&ds, &ens, &cfg).map_err(Failure::solver)?;
    let mut y_hat = predict(&model.w, &ds).map_err(Failure::solver)?;
    prep.unscale_predictions(&mut y_hat);

    let _ = writeln!(out, "\n[result]");
    let _ = writeln!(out, "samples = {}", ds.n_samples());
    let _ = writeln!(out, "w = {}", join(&model.w));
    let _ = writeln!(out, "lambda = {}", join(&model.lambda));
    let _ = writeln!(out, "iterations = {}", model.trace.len());
    let _ = writeln!(out, "converged = {}", model.trace.converged);
    let _ = writeln!(out, "final_risk = {}", num(model.trace.final_risk()));
    let _ = writeln!(
        out,
        "train_mae = {}",
        num(mae(raw.labels(), &y_hat).map_err(Failure::input)?)
    );
    let _ = writeln!(
        out,
        "train_rmse = {}",
        num(rmse(raw.labels(), &y_hat).map_err(Failure::input)?)
    );

    ModelDocument::new(&model, prep)
        .save(&args.output)
        .map_err(Failure::input)?;
    Ok(Output::ok(out))
}

fn cmd_predict(args: &PredictArgs) -> Result<Output, Failure> {
    let doc = ModelDocument::load(&args.model).map_err(Failure::input)?;
    let (mut raw, labeled) = load(&args.data)?;
    let width = doc.preprocessing.raw_width(doc.w.len());
    if args.data.format == Format::Libsvm && raw.n_features() < width {
        raw = raw.pad_features(width).map_err(Failure::input)?;
    }
    if raw.n_features() != width {
        return Err(Failure::input(format!(
            "model expects {width} features, data has {}",
            raw.n_features()
        )));
    }

    let mut out = String::from("[config]\ncommand = predict\n");
    let _ = writeln!(out, "model = {}", args.model.display());
    echo_data(&mut out, &args.data);
    if let Some(p) = &args.output {
        let _ = writeln!(out, "output = {}", p.display());
    }

    let ds = doc.preprocessing.apply(&raw).map_err(Failure::input)?;
    let mut y_hat = predict(&doc.w, &ds).map_err(Failure::solver)?;
    doc.preprocessing.unscale_predictions(&mut y_hat);

    let _ = writeln!(out, "\n[result]");
    let _ = writeln!(out, "samples = {}", y_hat.len());
    if labeled {
        let _ = writeln!(
            out,
            "mae = {}",
            num(mae(raw.labels(), &y_hat).map_err(Failure::input)?)
        );
        let _ = writeln!(
            out,
            "rmse = {}",
            num(rmse(raw.labels(), &y_hat).map_err(Failure::input)?)
        );
    }
    let column: String = y_hat.iter().map(|v| format!("{v}\n")).collect();
    match &args.output {
        Some(p) => std::fs::write(p, column).map_err(Failure::input)?,
        None => {
            out.push_str("\n[predictions]\n");
            out.push_str(&column);
        }
    }
    Ok(Output::ok(out))
}

fn cmd_toy(args: &ToyArgs) -> Result<Output, Failure> {
    let ens = args.solver.ensemble(TOY_ENSEMBLE)?;
    let cfg = args.solver.config();
    cfg.validate().map_err(Failure::input)?;

    let mut out = String::from("[config]\ncommand = toy\n");
    let noise = match args.noise {
        ToyNoise::Clean => NoiseConfig::clean(),
        ToyNoise::Gaussian => NoiseConfig::gaussian(args.std, args.seed),
        ToyNoise::Outlier => NoiseConfig::clean(),
    };
    let mode = match args.noise {
        ToyNoise::Clean => "clean",
        ToyNoise::Gaussian => "gaussian",
        ToyNoise::Outlier => "outlier",
    };
    let _ = writeln!(out, "noise = {mode}");
    let _ = writeln!(out, "seed = {}", args.seed);
    if args.noise == ToyNoise::Gaussian {
        let _ = writeln!(out, "std = {}", num(args.std));
    }
    let mut ds = synth_line(&ToyConfig { noise }).map_err(Failure::input)?;
    if args.noise == ToyNoise::Outlier {
        let n = ds.n_samples();
        if args.outliers > n {
            return Err(Failure::input(format!(
                "cannot place {} outliers among {n} samples",
                args.outliers
            )));
        }
        let _ = writeln!(out, "outliers = {}", args.outliers);
        let _ = writeln!(out, "magnitude = {}", num(args.magnitude));
        let fraction = args.outliers as f64 / n as f64;
        ds = inject_outliers(
            &ds,
            &NoiseConfig::outliers(fraction, args.magnitude, args.seed),
        )
        .map_err(Failure::input)?;
    }
    echo_solver(&mut out, &ens, &cfg);

    let model = fit(&ds, &ens, &cfg).map_err(Failure::solver)?;
    let _ = writeln!(out, "\n[result]");
    let header: Vec<String> = ens
        .losses()
        .iter()
        .map(|l| format!("lambda_{}", l.kind))
        .collect();
    let _ = writeln!(out, "{},w,iterations,final_risk", header.join(","));
    let lambda: Vec<String> = model.lambda.iter().map(|l| format!("{l:.4}")).collect();
    let _ = writeln!(
        out,
        "{},{:.4},{},{:.6}",
        lambda.join(","),
        model.w[0],
        model.trace.len(),
        model.trace.final_risk()
    );
    if let Ok(r) = decrease_ratio(&model.trace, 10, 30) {
        let _ = writeln!(out, "decrease_ratio_10_30 = {}", num(r.value));
    }
    Ok(Output::ok(out))
}

fn cmd_bench(args: &BenchArgs) -> Result<Output, Failure> {
    let manifest = Manifest::load(&args.manifest).map_err(Failure::input)?;
    let base = args.manifest.parent().unwrap_or(Path::new("."));
    let report = run_benchmark(&manifest, base);

    let mut out = String::from("[config]\ncommand = bench\n");
    let _ = writeln!(out, "manifest = {}", args.manifest.display());
    let _ = writeln!(out, "output = {}", args.output.display());
    out.push_str("\n# resolved manifest\n");
    out.push_str(&report.manifest.to_toml().map_err(Failure::input)?);

    write_report(&report, &args.output).map_err(Failure::input)?;

    let _ = writeln!(out, "\n[result]");
    let _ = writeln!(out, "cells = {}", report.cells.len());
    let _ = writeln!(out, "failed = {}", report.failed_cells());
    out.push_str(&report.to_csv());
    for cell in report.cells.iter().filter(|c| !c.is_ok()) {
        eprintln!(
            "failed cell {} / {} / {}: {:?}",
            cell.dataset, cell.method, cell.contamination, cell.status
        );
    }
    Ok(Output {
        text: out,
        code: if report.all_ok() { 0 } else { 3 },
    })
}
