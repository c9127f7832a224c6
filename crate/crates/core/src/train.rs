//! Alternating optimization: solve the SVM on the current deep kernel,
//! step the combination weights against the span-bound gradient (or the
//! dual-objective gradient for the baseline), project to non-negative,
//! repeat. Returns the best weights seen, not the last.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::arch::{self, ArchConfig};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::span::{self, SpanConfig};
use crate::svm::{self, SvmModel, SvmParams};

/// Which objective drives the weight updates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    /// Minimize the smoothed span estimate of the leave-one-out error.
    Span,
    /// Minimize the dual optimum (the classical margin-maximization
    /// baseline).
    Dual,
}

/// Training knobs. `gamma` holds one step size per base kernel; a single
/// entry broadcasts to all kernels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainOptions {
    pub objective: Objective,
    pub gamma: Vec<f64>,
    pub max_iters: usize,
    pub c: f64,
    pub span: SpanConfig,
    /// Relative objective change under which training counts as stalled.
    pub stop_tol: f64,
    /// Number of iterations the stall comparison looks back over.
    pub stop_window: usize,
    pub seed: u64,
    /// KKT tolerance handed to the SVM solver. Tighter than the solver's
    /// own default: the span workspace divides by α and α², so dual-
    /// coefficient slop shows up amplified in the objective trace.
    pub svm_tol: f64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            objective: Objective::Span,
            gamma: vec![0.05],
            max_iters: 500,
            c: 10.0,
            span: SpanConfig::default(),
            stop_tol: 1e-6,
            stop_window: 10,
            seed: 0,
            svm_tol: 1e-6,
        }
    }
}

impl TrainOptions {
    pub fn with_objective(objective: Objective) -> Self {
        TrainOptions {
            objective,
            ..Default::default()
        }
    }

    fn validate(&self, kernels: usize) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::InvalidConfig("max_iters must be >= 1".into()));
        }
        if self.gamma.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one step size is required".into(),
            ));
        }
        if self.gamma.len() != 1 && self.gamma.len() != kernels {
            return Err(Error::DimensionMismatch {
                expected: kernels,
                got: self.gamma.len(),
            });
        }
        for &g in &self.gamma {
            if !(0.0..=1.0).contains(&g) {
                return Err(Error::InvalidConfig(format!(
                    "step sizes must lie in [0,1], got {g}"
                )));
            }
        }
        self.span.validate()
    }

    fn gamma_for(&self, kernel: usize) -> f64 {
        if self.gamma.len() == 1 {
            self.gamma[0]
        } else {
            self.gamma[kernel]
        }
    }
}

/// Why training stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    MaxIters,
    Stalled,
    /// The span workspace degenerated (too few support vectors or a
    /// singular bordered system) and stayed degenerate; the best earlier
    /// weights are returned.
    Degenerate,
}

/// Per-iteration record of one training run. Skipped iterations (fewer
/// than two support vectors under the span objective) record `NaN`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    pub objective_trace: Vec<f64>,
    pub sv_count_trace: Vec<usize>,
    pub iterations: usize,
    pub termination: Termination,
    pub best_iteration: usize,
    pub best_objective: f64,
}

/// A trained architecture with its final SVM model and run record.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub config: ArchConfig,
    pub model: SvmModel,
    pub report: TrainReport,
}

const MAX_CONSECUTIVE_SKIPS: usize = 20;

/// Run the alternating optimization on a training set.
pub fn fit(config: &ArchConfig, train: &Dataset, opts: &TrainOptions) -> Result<FitResult> {
    opts.validate(config.kernel_count())?;
    let y = &train.y;
    let pos = y.iter().filter(|&&v| v > 0.0).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::InvalidConfig(
            "training set must contain both classes".into(),
        ));
    }

    let mut current = config.clone();
    let params = SvmParams::with_tol(opts.c, opts.svm_tol);
    let mut warm: Option<Vec<f64>> = None;

    let mut trace: Vec<f64> = Vec::with_capacity(opts.max_iters);
    let mut sv_trace: Vec<usize> = Vec::with_capacity(opts.max_iters);
    let mut best_obj = f64::INFINITY;
    let mut best_iter = 0usize;
    let mut best_theta = current.theta().to_vec();
    let mut skips = 0usize;
    let mut termination = Termination::MaxIters;

    let fail = |iter: usize, trace: Vec<f64>, sv: Vec<usize>, source: Error| -> Error {
        let n = trace.len();
        Error::Training {
            at_iteration: iter,
            report: Box::new(TrainReport {
                objective_trace: trace,
                sv_count_trace: sv,
                iterations: n,
                termination: Termination::MaxIters,
                best_iteration: 0,
                best_objective: f64::NAN,
            }),
            source: Box::new(source),
        }
    };

    for iter in 0..opts.max_iters {
        let stack = match arch::forward(&current, &train.x) {
            Ok(s) => s,
            Err(e) => return Err(fail(iter, trace, sv_trace, e)),
        };
        let model = match svm::solve_with(stack.final_gram(), y, params, warm.as_deref()) {
            Ok(m) => m,
            Err(e) => return Err(fail(iter, trace, sv_trace, e)),
        };
        warm = Some(model.alpha.clone());
        let nsv = model.sv_indices.len();
        sv_trace.push(nsv);

        // objective, gradient and the degenerate-iteration rule
        let mut gradient: Option<Vec<f64>> = None;
        let objective = match opts.objective {
            Objective::Dual => {
                let dks = match arch::grad_theta(&current, &stack) {
                    Ok(g) => g,
                    Err(e) => return Err(fail(iter, trace, sv_trace, e)),
                };
                let mut g = Vec::with_capacity(dks.len());
                for dk in &dks {
                    match svm::dual_grad_theta(&model, dk) {
                        Ok(v) => g.push(v),
                        Err(e) => return Err(fail(iter, trace, sv_trace, e)),
                    }
                }
                gradient = Some(g);
                model.dual_value
            }
            Objective::Span => {
                if nsv < 2 {
                    f64::NAN
                } else {
                    // a singular or otherwise degenerate workspace is the
                    // span-side analogue of losing the support vectors:
                    // skip the update and let the skip counter decide
                    match evaluate_span_step(&current, &stack, &model, &opts.span) {
                        Ok((t, g)) => {
                            gradient = Some(g);
                            t
                        }
                        Err(
                            Error::Singular { .. }
                            | Error::TooFewSupportVectors { .. }
                            | Error::Numeric { .. },
                        ) => f64::NAN,
                        Err(e) => return Err(fail(iter, trace, sv_trace, e)),
                    }
                }
            }
        };
        trace.push(objective);

        if objective.is_nan() {
            skips += 1;
            if skips >= MAX_CONSECUTIVE_SKIPS {
                if best_obj.is_finite() {
                    termination = Termination::Degenerate;
                    break;
                }
                return Err(fail(
                    iter,
                    trace,
                    sv_trace,
                    Error::TooFewSupportVectors { got: nsv },
                ));
            }
            continue;
        }
        skips = 0;

        if objective < best_obj {
            best_obj = objective;
            best_iter = iter;
            best_theta = current.theta().to_vec();
        }

        // stall detection over a trailing window
        let t = trace.len();
        if t > opts.stop_window {
            let past = trace[t - 1 - opts.stop_window];
            let now = trace[t - 1];
            if past.is_finite() {
                let rel = (now - past).abs() / past.abs().max(1.0);
                if rel < opts.stop_tol {
                    termination = Termination::Stalled;
                    break;
                }
            }
        }
        if iter + 1 == opts.max_iters {
            break;
        }

        let g = gradient.expect("gradient computed for non-skipped iteration");
        let theta = current.theta_mut();
        for (idx, gi) in g.iter().enumerate() {
            let step = opts.gamma_for(idx % config.kernel_count());
            theta[idx] = (theta[idx] - step * gi).max(0.0);
        }
    }

    // re-solve at the best weights seen
    current.set_theta(best_theta)?;
    let stack = arch::forward(&current, &train.x)?;
    let model = svm::solve_with(stack.final_gram(), y, params, None)?;
    let iterations = trace.len();
    let report = TrainReport {
        objective_trace: trace,
        sv_count_trace: sv_trace,
        iterations,
        termination,
        best_iteration: best_iter,
        best_objective: best_obj,
    };
    Ok(FitResult {
        config: current,
        model,
        report,
    })
}

/// Span objective value and its full weight gradient for one iteration.
fn evaluate_span_step(
    config: &ArchConfig,
    stack: &arch::GramStack,
    model: &SvmModel,
    span_cfg: &SpanConfig,
) -> Result<(f64, Vec<f64>)> {
    let ws = span::build_workspace(model, stack.final_gram(), span_cfg)?;
    let t = span::t_span(model, &ws, span_cfg)?;
    let dks = arch::grad_theta(config, stack)?;
    let g = span::span_grad_batch(&ws, &dks, model, span_cfg)?;
    Ok((t, g))
}

/// Fraction of test points the trained model classifies correctly.
pub fn evaluate(
    config: &ArchConfig,
    model: &SvmModel,
    train: &Dataset,
    test: &Dataset,
) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::TooFewRows { needed: 1, got: 0 });
    }
    let k_cross = arch::forward_cross(config, &train.x, &test.x)?;
    let pred = svm::predict(model, &k_cross)?;
    let correct = pred
        .iter()
        .zip(test.y.iter())
        .filter(|(p, t)| p == t)
        .count();
    Ok(correct as f64 / test.len() as f64)
}

/// Seeded two-blob toy data used by tests and examples: class centers at
/// `±separation/2` on the first axis with unit-box noise.
pub fn toy_blobs(n_per_class: usize, separation: f64, seed: u64) -> Dataset {
    use ndarray::Array1;
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = 2 * n_per_class;
    let mut x = Array2::zeros((n, 2));
    let mut y = Array1::zeros(n);
    for i in 0..n {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        x[[i, 0]] = sign * separation / 2.0 + rng.gen_range(-1.0..1.0);
        x[[i, 1]] = rng.gen_range(-1.0..1.0);
        y[i] = sign;
    }
    Dataset {
        x,
        y,
        standardization: vec![],
    }
}
