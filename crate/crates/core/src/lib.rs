//! Deep multiple kernel learning.
//!
//! Layered weighted combinations of base kernels (linear, RBF, sigmoid,
//! polynomial), normalized to the unit hypersphere at every layer, trained
//! by gradient descent on a smoothed span estimate of the SVM
//! leave-one-out error (or on the SVM dual objective as a baseline),
//! together with closed-form capacity calculators and the benchmark
//! statistics (mean ranks, Wilcoxon signed-rank) used to compare methods.
//!
//! ```
//! use deepmkl_core::{ArchConfig, KernelSpec};
//! use ndarray::array;
//!
//! let cfg = ArchConfig::new(2, 1, KernelSpec::default_roster()).unwrap();
//! let x = array![[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
//! let stack = deepmkl_core::arch::forward(&cfg, &x).unwrap();
//! assert!((stack.final_gram()[[0, 0]] - 1.0).abs() < 1e-12);
//! ```

pub mod arch;
pub mod bounds;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod kernels;
pub mod linalg;
pub mod span;
pub mod stats;
pub mod svm;
pub mod train;

pub use arch::{forward, forward_cross, grad_theta, ArchConfig, GramStack};
pub use bounds::{equivalent_ffn_width, pseudo_dim_bound, rademacher_bound, BoundQuery};
pub use dataset::{load_csv, split, standardize, Dataset, RawDataset, SplitSpec};
pub use error::{Error, Result};
pub use experiment::{run, ExperimentConfig, ResultsTable};
pub use kernels::KernelSpec;
pub use span::{
    build_workspace, smoothed_span_sq, span_grad, span_grad_batch, t_span, SpanConfig,
    SpanWorkspace,
};
pub use stats::{mean_ranks, mean_ranks_dense, wilcoxon_signed_rank};
pub use svm::{dual_grad_theta, predict, solve, SvmModel, SvmParams};
pub use train::{evaluate, fit, FitResult, Objective, TrainOptions, TrainReport};
