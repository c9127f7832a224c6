//! Config-driven benchmark runner: for every dataset and seed, split,
//! standardize, train each method, and evaluate; then aggregate seed-mean
//! accuracies into tie-averaged mean ranks and paired Wilcoxon p-values
//! against a reference method. Emits a full-precision JSON report and a
//! two-decimal markdown grid.

use std::path::{Path, PathBuf};

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{self, Dataset, SplitSpec};
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::span::SpanConfig;
use crate::stats;
use crate::train::{self, Objective, TrainOptions};
use crate::ArchConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub name: String,
    pub path: PathBuf,
    pub label: String,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    pub objective: Objective,
    pub layers: usize,
}

impl MethodSpec {
    pub fn name(&self) -> String {
        let obj = match self.objective {
            Objective::Span => "span",
            Objective::Dual => "dual",
        };
        format!("{obj}-{}", self.layers)
    }
}

/// Optional overrides for the per-cell training options.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smoothing_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_fraction: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default = "default_json_path")]
    pub json: PathBuf,
    #[serde(default = "default_md_path")]
    pub markdown: PathBuf,
}

fn default_json_path() -> PathBuf {
    PathBuf::from("results.json")
}
fn default_md_path() -> PathBuf {
    PathBuf::from("results.md")
}

impl Default for OutputPaths {
    fn default() -> Self {
        OutputPaths {
            json: default_json_path(),
            markdown: default_md_path(),
        }
    }
}

/// The experiment grid: datasets × methods × seeds. Unknown JSON keys are
/// rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetEntry>,
    pub methods: Vec<MethodSpec>,
    pub seeds: Vec<u64>,
    #[serde(default = "default_sets")]
    pub sets: usize,
    #[serde(default = "KernelSpec::default_roster")]
    pub kernels: Vec<KernelSpec>,
    #[serde(default)]
    pub train: TrainOverrides,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    #[serde(default)]
    pub output: OutputPaths,
}

fn default_sets() -> usize {
    1
}

impl ExperimentConfig {
    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let cfg: ExperimentConfig = serde_json::from_reader(std::io::BufReader::new(file))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one dataset is required".into(),
            ));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one method is required".into(),
            ));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("at least one seed is required".into()));
        }
        if let Some(reference) = &self.reference {
            if !self.methods.iter().any(|m| &m.name() == reference) {
                return Err(Error::InvalidConfig(format!(
                    "reference method {reference:?} is not in the method list"
                )));
            }
        }
        Ok(())
    }

    fn train_options(&self, method: &MethodSpec, seed: u64) -> TrainOptions {
        let mut opts = TrainOptions::with_objective(method.objective);
        opts.seed = seed;
        if let Some(gamma) = &self.train.gamma {
            opts.gamma = gamma.clone();
        }
        if let Some(v) = self.train.max_iters {
            opts.max_iters = v;
        }
        if let Some(v) = self.train.c {
            opts.c = v;
        }
        let mut span = SpanConfig::default();
        if let Some(v) = self.train.eta {
            span.eta = v;
        }
        if let Some(v) = self.train.smoothing_c {
            span.c = v;
        }
        opts.span = span;
        if let Some(v) = self.train.stop_tol {
            opts.stop_tol = v;
        }
        opts
    }
}

/// One failed grid cell and why.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellFailure {
    pub dataset: String,
    pub method: String,
    pub seed: u64,
    pub reason: String,
}

/// Full benchmark results: the raw accuracy tensor, seed means, and the
/// aggregate statistics when every cell succeeded.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultsTable {
    pub datasets: Vec<String>,
    pub methods: Vec<String>,
    pub seeds: Vec<u64>,
    /// `accuracy[dataset][method][seed]`, `null` where the cell failed.
    pub accuracy: Vec<Vec<Vec<Option<f64>>>>,
    pub failures: Vec<CellFailure>,
    /// `seed_means[dataset][method]`, `null` if any seed failed.
    pub seed_means: Vec<Vec<Option<f64>>>,
    pub reference: String,
    pub mean_ranks: Option<Vec<f64>>,
    /// Paired Wilcoxon p-value of each method against the reference
    /// (`null` for the reference itself or when unavailable).
    pub p_values: Option<Vec<Option<f64>>>,
}

impl ResultsTable {
    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    }

    pub fn write_json<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn write_markdown<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        std::fs::write(path, self.render_markdown())?;
        Ok(())
    }

    /// The benchmark-grid view: datasets as rows, methods as columns,
    /// percent accuracies with two decimals, then rank and p-value rows.
    pub fn render_markdown(&self) -> String {
        let mut out = String::new();
        out.push_str("| Dataset |");
        for m in &self.methods {
            out.push_str(&format!(" {m} |"));
        }
        out.push('\n');
        out.push_str("|---|");
        for _ in &self.methods {
            out.push_str("---|");
        }
        out.push('\n');
        for (d, name) in self.datasets.iter().enumerate() {
            out.push_str(&format!("| {name} |"));
            for m in 0..self.methods.len() {
                match self.seed_means[d][m] {
                    Some(v) => out.push_str(&format!(" {:.2} |", v * 100.0)),
                    None => out.push_str(" — |"),
                }
            }
            out.push('\n');
        }
        out.push_str("| Rank |");
        for m in 0..self.methods.len() {
            match &self.mean_ranks {
                Some(ranks) => out.push_str(&format!(" {:.2} |", ranks[m])),
                None => out.push_str(" — |"),
            }
        }
        out.push('\n');
        out.push_str("| p-value |");
        for m in 0..self.methods.len() {
            let cell = self.p_values.as_ref().and_then(|p| p[m]);
            match cell {
                Some(p) => out.push_str(&format!(" {p:.3} |")),
                None => out.push_str(" — |"),
            }
        }
        out.push('\n');
        out
    }
}

/// Execute the whole grid. Per-cell failures are recorded and skipped;
/// aggregate statistics are computed only when every cell succeeded.
pub fn run(config: &ExperimentConfig) -> Result<ResultsTable> {
    config.validate()?;
    let arch_for = |layers: usize| ArchConfig::new(layers, config.sets, config.kernels.clone());
    // fail early on an invalid architecture rather than per cell
    for method in &config.methods {
        arch_for(method.layers)?;
    }

    // load and split every dataset × seed once; methods share splits
    let mut prepared: Vec<Vec<std::result::Result<(Dataset, Dataset), String>>> = Vec::new();
    for entry in &config.datasets {
        let raw = dataset::load_csv(&entry.path, &entry.label)?;
        let mut per_seed = Vec::new();
        for &seed in &config.seeds {
            let frac = config.train.train_fraction.unwrap_or(0.5);
            let spec = SplitSpec {
                seed,
                train_fraction: frac,
            };
            let cell = dataset::split(&raw, &spec)
                .and_then(|(tr, te)| dataset::standardize(&tr, &te))
                .map_err(|e| e.to_string());
            per_seed.push(cell);
        }
        prepared.push(per_seed);
    }

    let n_d = config.datasets.len();
    let n_m = config.methods.len();
    let n_s = config.seeds.len();
    let cells: Vec<(usize, usize, usize)> = (0..n_d)
        .flat_map(|d| (0..n_m).flat_map(move |m| (0..n_s).map(move |s| (d, m, s))))
        .collect();

    let outcomes: Vec<((usize, usize, usize), std::result::Result<f64, String>)> = cells
        .par_iter()
        .map(|&(d, m, s)| {
            let outcome = match &prepared[d][s] {
                Err(reason) => Err(reason.clone()),
                Ok((train_set, test_set)) => {
                    let method = &config.methods[m];
                    let opts = config.train_options(method, config.seeds[s]);
                    arch_for(method.layers)
                        .and_then(|arch| train::fit(&arch, train_set, &opts))
                        .and_then(|fitres| {
                            train::evaluate(&fitres.config, &fitres.model, train_set, test_set)
                        })
                        .map_err(|e| e.to_string())
                }
            };
            ((d, m, s), outcome)
        })
        .collect();

    let mut accuracy = vec![vec![vec![None; n_s]; n_m]; n_d];
    let mut failures = Vec::new();
    for ((d, m, s), outcome) in outcomes {
        match outcome {
            Ok(acc) => accuracy[d][m][s] = Some(acc),
            Err(reason) => failures.push(CellFailure {
                dataset: config.datasets[d].name.clone(),
                method: config.methods[m].name(),
                seed: config.seeds[s],
                reason,
            }),
        }
    }

    let seed_means: Vec<Vec<Option<f64>>> = (0..n_d)
        .map(|d| {
            (0..n_m)
                .map(|m| {
                    let vals: Vec<f64> = accuracy[d][m].iter().flatten().copied().collect();
                    if vals.len() == n_s {
                        Some(vals.iter().sum::<f64>() / n_s as f64)
                    } else {
                        None
                    }
                })
                .collect()
        })
        .collect();

    let reference = config
        .reference
        .clone()
        .unwrap_or_else(|| config.methods.last().unwrap().name());

    let complete = seed_means.iter().all(|row| row.iter().all(Option::is_some));
    let (mean_ranks, p_values) = if complete {
        let acc = Array2::from_shape_fn((n_d, n_m), |(d, m)| seed_means[d][m].unwrap());
        let ranks = stats::mean_ranks(&acc)?;
        let ref_idx = config
            .methods
            .iter()
            .position(|m| m.name() == reference)
            .expect("validated reference");
        let ref_col: Vec<f64> = (0..n_d).map(|d| acc[[d, ref_idx]]).collect();
        let ps: Vec<Option<f64>> = (0..n_m)
            .map(|m| {
                if m == ref_idx || n_d < 2 {
                    None
                } else {
                    let col: Vec<f64> = (0..n_d).map(|d| acc[[d, m]]).collect();
                    stats::wilcoxon_signed_rank(&col, &ref_col).ok()
                }
            })
            .collect();
        (Some(ranks), Some(ps))
    } else {
        (None, None)
    };

    Ok(ResultsTable {
        datasets: config.datasets.iter().map(|d| d.name.clone()).collect(),
        methods: config.methods.iter().map(MethodSpec::name).collect(),
        seeds: config.seeds.clone(),
        accuracy,
        failures,
        seed_means,
        reference,
        mean_ranks,
        p_values,
    })
}
