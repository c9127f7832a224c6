//! Shared fixtures and independent oracles for the integration suites:
//! small random kernel problems, a frozen-support-set span recomputation,
//! an equality-constrained QP solved through its KKT system, and plain
//! central finite differences. Everything here deliberately avoids the
//! library's own gradient paths.

#![allow(dead_code)]

use deepmkl_core::arch::{self, ArchConfig};
use deepmkl_core::dataset::Dataset;
use deepmkl_core::kernels::KernelSpec;
use deepmkl_core::linalg;
use deepmkl_core::svm::{self, SvmModel, SvmParams};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random labelled points with mild class structure so SVM solutions have
/// a healthy mix of support vectors.
pub fn random_problem(n: usize, d: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Array2::zeros((n, d));
    let mut y = Array1::zeros(n);
    for i in 0..n {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        for c in 0..d {
            let center = if c == 0 { sign * 0.8 } else { 0.0 };
            x[[i, c]] = center + rng.gen_range(-1.0..1.0);
        }
        y[i] = sign;
    }
    Dataset {
        x,
        y,
        standardization: vec![],
    }
}

/// Architecture with the full four-kernel roster and randomized positive
/// weights.
pub fn random_config(layers: usize, sets: usize, seed: u64) -> ArchConfig {
    let mut cfg = ArchConfig::new(layers, sets, KernelSpec::default_roster()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let theta: Vec<f64> = (0..cfg.weight_count())
        .map(|_| rng.gen_range(0.1..0.6))
        .collect();
    cfg.set_theta(theta).unwrap();
    cfg
}

/// Forward plus a tightly-converged SVM solve.
pub fn solve_pipeline(cfg: &ArchConfig, data: &Dataset, c: f64) -> (Array2<f64>, SvmModel) {
    solve_pipeline_warm(cfg, data, c, None)
}

/// [`solve_pipeline`] seeded from a previous α, so nearby solves follow
/// correlated solver paths (useful inside finite differences).
pub fn solve_pipeline_warm(
    cfg: &ArchConfig,
    data: &Dataset,
    c: f64,
    warm: Option<&[f64]>,
) -> (Array2<f64>, SvmModel) {
    let stack = arch::forward(cfg, &data.x).unwrap();
    let k = stack.final_gram().clone();
    let model = svm::solve_with(&k, &data.y, SvmParams::with_tol(c, 1e-10), warm).unwrap();
    (k, model)
}

/// True when no dual coefficient sits at the box bound (the span
/// machinery differentiates the free-vector KKT system).
pub fn all_svs_free(model: &SvmModel) -> bool {
    model
        .sv_indices
        .iter()
        .all(|&i| model.alpha[i] < model.c - 1e-3)
}

/// The bordered free-SV system `K̃(β; b) = (y; 0)` solved directly;
/// returns the implied α on the frozen support set.
pub fn frozen_sv_alpha(k_full: &Array2<f64>, sv: &[usize], y_sv: &[f64]) -> Vec<f64> {
    let nsv = sv.len();
    let mut k_tilde = Array2::zeros((nsv + 1, nsv + 1));
    for p in 0..nsv {
        for r in 0..nsv {
            k_tilde[[p, r]] = k_full[[sv[p], sv[r]]];
        }
        k_tilde[[p, nsv]] = 1.0;
        k_tilde[[nsv, p]] = 1.0;
    }
    let mut rhs = Array1::zeros(nsv + 1);
    for p in 0..nsv {
        rhs[p] = y_sv[p];
    }
    let beta = linalg::solve(&k_tilde, &rhs).unwrap();
    (0..nsv).map(|p| y_sv[p] * beta[p]).collect()
}

/// Regularized span `S̄_p²` recomputed from scratch on a frozen support
/// set: bordered matrix, `B = K̃ + Q`, `1/[B⁻¹]_pp − Q_pp`, with α taken
/// from the bordered system (not the solver).
pub fn frozen_sv_span_sq(k_full: &Array2<f64>, sv: &[usize], y_sv: &[f64], eta: f64) -> Vec<f64> {
    let nsv = sv.len();
    let alpha = frozen_sv_alpha(k_full, sv, y_sv);
    let mut b = Array2::zeros((nsv + 1, nsv + 1));
    for p in 0..nsv {
        for r in 0..nsv {
            b[[p, r]] = k_full[[sv[p], sv[r]]];
        }
        b[[p, nsv]] = 1.0;
        b[[nsv, p]] = 1.0;
        b[[p, p]] += eta / alpha[p];
    }
    let (b_inv, _) = linalg::invert_with_cond(&b).unwrap();
    (0..nsv)
        .map(|p| 1.0 / b_inv[[p, p]] - eta / alpha[p])
        .collect()
}

/// The span as an equality-constrained quadratic program, solved through
/// its KKT linear system and evaluated on the original objective:
/// `min ‖Φ(x_p) − Σ λ_i Φ(x_i)‖² + η Σ λ_i²/α_i` over `Σλ = 1`,
/// with the feature-space norm expanded through kernel entries.
pub fn qp_span_sq(k_full: &Array2<f64>, sv: &[usize], alpha_sv: &[f64], p: usize, eta: f64) -> f64 {
    let others: Vec<usize> = (0..sv.len()).filter(|&r| r != p).collect();
    let n = others.len();
    // KKT of min λᵀ(Ḱ + D́)λ − 2 k_pᵀ λ  s.t.  1ᵀλ = 1
    let mut kkt = Array2::zeros((n + 1, n + 1));
    let mut rhs = Array1::zeros(n + 1);
    for (a, &ra) in others.iter().enumerate() {
        for (bb, &rb) in others.iter().enumerate() {
            kkt[[a, bb]] = 2.0 * k_full[[sv[ra], sv[rb]]];
        }
        kkt[[a, a]] += 2.0 * eta / alpha_sv[ra];
        kkt[[a, n]] = 1.0;
        kkt[[n, a]] = 1.0;
        rhs[a] = 2.0 * k_full[[sv[p], sv[ra]]];
    }
    rhs[n] = 1.0;
    let sol = linalg::solve(&kkt, &rhs).unwrap();

    // evaluate the original objective at the minimizer
    let mut norm_sq = k_full[[sv[p], sv[p]]];
    let mut reg = 0.0;
    for (a, &ra) in others.iter().enumerate() {
        norm_sq -= 2.0 * sol[a] * k_full[[sv[p], sv[ra]]];
        reg += eta * sol[a] * sol[a] / alpha_sv[ra];
        for (bb, &rb) in others.iter().enumerate() {
            norm_sq += sol[a] * sol[bb] * k_full[[sv[ra], sv[rb]]];
        }
    }
    norm_sq + reg
}

/// Central finite difference of a vector-valued function of one weight.
pub fn central_diff<F>(f: F, at: f64, step: f64) -> Vec<f64>
where
    F: Fn(f64) -> Vec<f64>,
{
    let plus = f(at + step);
    let minus = f(at - step);
    plus.iter()
        .zip(&minus)
        .map(|(p, m)| (p - m) / (2.0 * step))
        .collect()
}
