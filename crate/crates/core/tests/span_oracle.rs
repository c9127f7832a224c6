//! Independent checks of the span machinery: the closed form against a
//! QP solved through its KKT system, and the analytic gradients against
//! finite differences with the support set frozen.

mod common;

use common::*;
use deepmkl_core::arch;
use deepmkl_core::span::{self, SpanConfig};

#[test]
fn closed_form_matches_qp_oracle() {
    let mut checked = 0usize;
    let mut seed = 0u64;
    while checked < 12 {
        seed += 1;
        let data = random_problem(16, 3, seed);
        let cfg = random_config(2, 1, seed + 900);
        let (k, model) = solve_pipeline(&cfg, &data, 10.0);
        if model.sv_indices.len() < 3 {
            continue;
        }
        for &eta in &[1e-3, 0.1, 1.0] {
            let span_cfg = SpanConfig::with_eta(eta);
            let ws = match span::build_workspace(&model, &k, &span_cfg) {
                Ok(w) => w,
                Err(_) => continue,
            };
            let alpha_sv: Vec<f64> = ws.alpha_sv.to_vec();
            for p in 0..ws.n_sv() {
                let closed = span::smoothed_span_sq(&ws, p).unwrap();
                let qp = qp_span_sq(&k, &ws.sv, &alpha_sv, p, eta);
                assert!(
                    (closed - qp).abs() <= 1e-6 * closed.abs().max(1.0),
                    "seed {seed} eta {eta} p {p}: closed {closed} vs qp {qp}"
                );
            }
        }
        checked += 1;
    }
}

#[test]
fn span_sq_is_non_decreasing_in_eta() {
    for seed in 1..6u64 {
        let data = random_problem(14, 3, seed);
        // PSD-friendly mix keeps the QP a genuine minimum
        let cfg = random_config(2, 1, seed + 40);
        let (k, model) = solve_pipeline(&cfg, &data, 10.0);
        if model.sv_indices.len() < 3 {
            continue;
        }
        let etas = [1e-4, 1e-3, 1e-2, 0.1, 0.3, 1.0];
        let mut prev: Option<Vec<f64>> = None;
        for &eta in &etas {
            let span_cfg = SpanConfig::with_eta(eta);
            let ws = match span::build_workspace(&model, &k, &span_cfg) {
                Ok(w) => w,
                Err(_) => continue,
            };
            let vals: Vec<f64> = (0..ws.n_sv())
                .map(|p| span::smoothed_span_sq(&ws, p).unwrap())
                .collect();
            if let Some(prev_vals) = &prev {
                for (a, b) in prev_vals.iter().zip(&vals) {
                    assert!(
                        *b >= a - 1e-9,
                        "seed {seed}: S̄² decreased from {a} to {b} as η grew"
                    );
                }
            }
            prev = Some(vals);
        }
    }
}

#[test]
fn span_gradient_matches_frozen_sv_finite_differences() {
    let mut instances = 0usize;
    let mut seed = 0u64;
    while instances < 8 {
        seed += 1;
        let layers = if seed % 2 == 0 { 2 } else { 3 };
        let data = random_problem(18, 3, seed + 300);
        let cfg = random_config(layers, 1, seed + 700);
        let (k, model) = solve_pipeline(&cfg, &data, 10.0);
        if model.sv_indices.len() < 3 || !all_svs_free(&model) {
            continue;
        }
        let span_cfg = SpanConfig::default();
        let ws = match span::build_workspace(&model, &k, &span_cfg) {
            Ok(w) => w,
            Err(_) => continue,
        };
        let y_sv: Vec<f64> = ws.y_sv.to_vec();
        let stack = arch::forward(&cfg, &data.x).unwrap();
        let dks = arch::grad_theta(&cfg, &stack).unwrap();

        for idx in (0..cfg.weight_count()).step_by(3) {
            let (analytic, _) = span::span_grad(&ws, &dks[idx], &model, &span_cfg).unwrap();
            let sv = ws.sv.clone();
            let fd = central_diff(
                |v| {
                    let mut pert = cfg.clone();
                    pert.theta_mut()[idx] = v;
                    let kp = arch::forward(&pert, &data.x).unwrap().final_gram().clone();
                    frozen_sv_span_sq(&kp, &sv, &y_sv, span_cfg.eta)
                },
                cfg.theta()[idx],
                1e-5,
            );
            for p in 0..ws.n_sv() {
                let a = analytic[p];
                let f = fd[p];
                let rel = (a - f).abs() / f.abs().max(1e-3);
                assert!(
                    rel < 1e-3,
                    "seed {seed} l={layers} θ{idx} p={p}: analytic {a} vs fd {f}"
                );
            }
        }
        instances += 1;
    }
}

#[test]
fn total_gradient_matches_full_pipeline_finite_differences() {
    let mut instances = 0usize;
    let mut seed = 0u64;
    while instances < 5 {
        seed += 1;
        let layers = if seed % 2 == 0 { 2 } else { 3 };
        let data = random_problem(16, 3, seed + 2000);
        let cfg = random_config(layers, 1, seed + 2500);
        let (k, model) = solve_pipeline(&cfg, &data, 10.0);
        if model.sv_indices.len() < 3 || !all_svs_free(&model) {
            continue;
        }
        let span_cfg = SpanConfig::default();
        let ws = match span::build_workspace(&model, &k, &span_cfg) {
            Ok(w) => w,
            Err(_) => continue,
        };
        let stack = arch::forward(&cfg, &data.x).unwrap();
        let dks = arch::grad_theta(&cfg, &stack).unwrap();
        let base_svs = model.sv_indices.clone();

        let base_alpha = model.alpha.clone();
        let pipeline_t = |cfg: &deepmkl_core::ArchConfig| -> Option<(f64, Vec<usize>)> {
            let (kp, mp) = solve_pipeline_warm(cfg, &data, 10.0, Some(&base_alpha));
            let wsp = span::build_workspace(&mp, &kp, &span_cfg).ok()?;
            let t = span::t_span(&mp, &wsp, &span_cfg).ok()?;
            Some((t, mp.sv_indices))
        };

        let step = 1e-4;
        let mut used = false;
        for idx in (0..cfg.weight_count()).step_by(4) {
            let (_, dt) = span::span_grad(&ws, &dks[idx], &model, &span_cfg).unwrap();
            let mut plus = cfg.clone();
            plus.theta_mut()[idx] += step;
            let mut minus = cfg.clone();
            minus.theta_mut()[idx] -= step;
            let (tp, svp) = match pipeline_t(&plus) {
                Some(v) => v,
                None => continue,
            };
            let (tm, svm_set) = match pipeline_t(&minus) {
                Some(v) => v,
                None => continue,
            };
            // the analytic gradient assumes a stable support set
            if svp != base_svs || svm_set != base_svs {
                continue;
            }
            let fd = (tp - tm) / (2.0 * step);
            let rel = (dt - fd).abs() / fd.abs().max(1e-2);
            assert!(
                rel < 1e-2,
                "seed {seed} l={layers} θ{idx}: analytic {dt} vs fd {fd}"
            );
            used = true;
        }
        if used {
            instances += 1;
        }
    }
}
