//! `deepmkl`: fit deep multiple kernel models, run benchmark grids, and
//! inspect capacity bounds and result statistics.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use deepmkl_core::dataset::{self, SplitSpec};
use deepmkl_core::experiment::{self, ExperimentConfig, ResultsTable};
use deepmkl_core::span::SpanConfig;
use deepmkl_core::stats;
use deepmkl_core::train::{self, Objective, TrainOptions};
use deepmkl_core::{bounds, ArchConfig, KernelSpec};

#[derive(Parser)]
#[command(
    name = "deepmkl",
    version,
    about = "Deep multiple kernel learning toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Span,
    Dual,
}

impl From<ObjectiveArg> for Objective {
    fn from(v: ObjectiveArg) -> Self {
        match v {
            ObjectiveArg::Span => Objective::Span,
            ObjectiveArg::Dual => Objective::Dual,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a benchmark grid described by a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Print capacity bounds for an architecture shape.
    Bounds {
        #[arg(long)]
        layers: usize,
        #[arg(long, default_value_t = 1)]
        sets: usize,
        #[arg(long)]
        kernels: usize,
        /// Kernel sup value u = sup √K(x,x).
        #[arg(long, default_value_t = 1.0)]
        u: f64,
    },
    /// Train one model on a CSV dataset and write it to JSON.
    Fit {
        #[arg(long)]
        data: PathBuf,
        /// Name of the label column.
        #[arg(long)]
        label: String,
        #[arg(long, default_value_t = 3)]
        layers: usize,
        #[arg(long, default_value_t = 1)]
        sets: usize,
        #[arg(long, value_enum, default_value_t = ObjectiveArg::Span)]
        objective: ObjectiveArg,
        /// Span regularizer η.
        #[arg(long, default_value_t = 0.1)]
        eta: f64,
        /// SVM box constraint C.
        #[arg(long = "c-svm", default_value_t = 10.0)]
        c_svm: f64,
        #[arg(long, default_value_t = 500)]
        iters: usize,
        /// Per-kernel gradient step size.
        #[arg(long, default_value_t = 0.05)]
        gamma: f64,
        #[arg(long, default_value_t = 0.5)]
        train_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recompute mean ranks and Wilcoxon p-values from a results file.
    Stats {
        #[arg(long)]
        table: PathBuf,
        /// Method name the p-values compare against.
        #[arg(long)]
        reference: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cmd: Command) -> deepmkl_core::Result<()> {
    match cmd {
        Command::Run { config } => cmd_run(&config),
        Command::Bounds {
            layers,
            sets,
            kernels,
            u,
        } => cmd_bounds(layers, sets, kernels, u),
        Command::Fit {
            data,
            label,
            layers,
            sets,
            objective,
            eta,
            c_svm,
            iters,
            gamma,
            train_fraction,
            seed,
            out,
        } => cmd_fit(FitArgs {
            data,
            label,
            layers,
            sets,
            objective: objective.into(),
            eta,
            c_svm,
            iters,
            gamma,
            train_fraction,
            seed,
            out,
        }),
        Command::Stats { table, reference } => cmd_stats(&table, reference.as_deref()),
    }
}

fn cmd_run(config_path: &PathBuf) -> deepmkl_core::Result<()> {
    let config = ExperimentConfig::load(config_path)?;
    let table = experiment::run(&config)?;
    table.write_json(&config.output.json)?;
    table.write_markdown(&config.output.markdown)?;
    print!("{}", table.render_markdown());
    for failure in &table.failures {
        eprintln!(
            "warning: cell ({}, {}, seed {}) failed: {}",
            failure.dataset, failure.method, failure.seed, failure.reason
        );
    }
    println!(
        "wrote {} and {}",
        config.output.json.display(),
        config.output.markdown.display()
    );
    Ok(())
}

fn cmd_bounds(layers: usize, sets: usize, kernels: usize, u: f64) -> deepmkl_core::Result<()> {
    let pdim = bounds::pseudo_dim_bound(layers, sets, kernels);
    let query = bounds::BoundQuery {
        layers,
        sets,
        kernels,
        u,
    };
    println!("pseudo-dimension bound: {pdim}");
    println!(
        "rademacher chaos bound: {:.6}",
        bounds::rademacher_bound(&query)
    );
    match bounds::equivalent_ffn_width(layers, sets, kernels) {
        Ok(width) => println!("equivalent feed-forward width: {width:.6}"),
        Err(_) => println!("equivalent feed-forward width: undefined for a single layer"),
    }
    Ok(())
}

struct FitArgs {
    data: PathBuf,
    label: String,
    layers: usize,
    sets: usize,
    objective: Objective,
    eta: f64,
    c_svm: f64,
    iters: usize,
    gamma: f64,
    train_fraction: f64,
    seed: u64,
    out: PathBuf,
}

/// What `fit` writes: the trained architecture, the SVM model, and the
/// run record with both accuracies.
#[derive(Serialize)]
struct ModelFile<'a> {
    arch: &'a ArchConfig,
    svm: &'a deepmkl_core::SvmModel,
    train_accuracy: f64,
    test_accuracy: f64,
    report: &'a train::TrainReport,
}

fn cmd_fit(args: FitArgs) -> deepmkl_core::Result<()> {
    let raw = dataset::load_csv(&args.data, &args.label)?;
    println!(
        "loaded {} rows ({} dropped by the missing-value filter)",
        raw.len(),
        raw.dropped_rows
    );
    let split_spec = SplitSpec {
        seed: args.seed,
        train_fraction: args.train_fraction,
    };
    let (train_raw, test_raw) = dataset::split(&raw, &split_spec)?;
    let (train_set, test_set) = dataset::standardize(&train_raw, &test_raw)?;

    let config = ArchConfig::new(args.layers, args.sets, KernelSpec::default_roster())?;
    let opts = TrainOptions {
        objective: args.objective,
        gamma: vec![args.gamma],
        max_iters: args.iters,
        c: args.c_svm,
        span: SpanConfig::with_eta(args.eta),
        seed: args.seed,
        ..TrainOptions::default()
    };
    let fitres = train::fit(&config, &train_set, &opts)?;
    let train_acc = train::evaluate(&fitres.config, &fitres.model, &train_set, &train_set)?;
    let test_acc = train::evaluate(&fitres.config, &fitres.model, &train_set, &test_set)?;

    let out = ModelFile {
        arch: &fitres.config,
        svm: &fitres.model,
        train_accuracy: train_acc,
        test_accuracy: test_acc,
        report: &fitres.report,
    };
    let file = std::fs::File::create(&args.out)?;
    serde_json::to_writer_pretty(std::io::BufWriter::new(file), &out)
        .map_err(deepmkl_core::Error::from)?;

    println!(
        "{} iterations ({:?}), best objective {:.6} at iteration {}",
        fitres.report.iterations,
        fitres.report.termination,
        fitres.report.best_objective,
        fitres.report.best_iteration
    );
    println!("train accuracy {train_acc:.4}, test accuracy {test_acc:.4}");
    println!("wrote {}", args.out.display());
    Ok(())
}

fn cmd_stats(table_path: &PathBuf, reference: Option<&str>) -> deepmkl_core::Result<()> {
    let table = ResultsTable::load(table_path)?;
    let n_d = table.datasets.len();
    let n_m = table.methods.len();
    let mut acc = ndarray::Array2::zeros((n_d, n_m));
    for d in 0..n_d {
        for m in 0..n_m {
            match table.seed_means[d][m] {
                Some(v) => acc[[d, m]] = v,
                None => {
                    return Err(deepmkl_core::Error::InvalidConfig(format!(
                        "missing cell for dataset {:?}, method {:?}",
                        table.datasets[d], table.methods[m]
                    )))
                }
            }
        }
    }
    let reference = reference.unwrap_or(&table.reference);
    let ref_idx = table
        .methods
        .iter()
        .position(|m| m == reference)
        .ok_or_else(|| {
            deepmkl_core::Error::InvalidConfig(format!("method {reference:?} not present in table"))
        })?;

    let ranks = stats::mean_ranks(&acc)?;
    println!("method, mean rank, p-value vs {reference}");
    let ref_col: Vec<f64> = (0..n_d).map(|d| acc[[d, ref_idx]]).collect();
    for m in 0..n_m {
        let p = if m == ref_idx || n_d < 2 {
            "—".to_string()
        } else {
            let col: Vec<f64> = (0..n_d).map(|d| acc[[d, m]]).collect();
            format!("{:.3}", stats::wilcoxon_signed_rank(&col, &ref_col)?)
        };
        println!("{}, {:.2}, {}", table.methods[m], ranks[m], p);
    }
    Ok(())
}
