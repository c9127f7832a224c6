//! Soft-margin SVM dual solver over a precomputed Gram matrix.
//!
//! The solver is SMO with deterministic maximal-violating-pair selection:
//! ties break toward the lowest index, so identical inputs always produce
//! identical models. Non-positive pairwise curvature (possible with the
//! sigmoid kernel, which is not PSD) is clipped to a small `TAU` so the
//! two-variable update stays well defined.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Threshold above which a dual coefficient counts as a support vector.
pub const SV_EPSILON: f64 = 1e-6;

const TAU: f64 = 1e-12;

/// Solver knobs. `tol` is the KKT gap `m(α) − M(α)` at which iteration
/// stops; `max_updates` caps the number of pairwise updates.
#[derive(Debug, Clone, Copy)]
pub struct SvmParams {
    pub c: f64,
    pub tol: f64,
    pub max_updates: usize,
}

impl SvmParams {
    pub fn new(c: f64) -> Self {
        SvmParams {
            c,
            tol: 1e-3,
            max_updates: 10_000_000,
        }
    }

    pub fn with_tol(c: f64, tol: f64) -> Self {
        SvmParams {
            tol,
            ..SvmParams::new(c)
        }
    }
}

/// A solved dual model. `labels` is kept so the decision function can be
/// evaluated from cross-kernel rows alone.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvmModel {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub sv_indices: Vec<usize>,
    pub c: f64,
    pub dual_value: f64,
    pub labels: Vec<f64>,
}

impl SvmModel {
    pub fn n(&self) -> usize {
        self.alpha.len()
    }
}

/// Maximize `Σα_i − ½ΣΣ α_iα_j y_iy_j K_ij` subject to `0 ≤ α ≤ C` and
/// `Σ α_i y_i = 0`, to KKT tolerance `1e-3`.
pub fn solve(k: &Array2<f64>, y: &Array1<f64>, c: f64) -> Result<SvmModel> {
    solve_with(k, y, SvmParams::new(c), None)
}

/// [`solve`] with explicit parameters and an optional warm-start α
/// (which must already satisfy the box and equality constraints).
pub fn solve_with(
    k: &Array2<f64>,
    y: &Array1<f64>,
    params: SvmParams,
    warm: Option<&[f64]>,
) -> Result<SvmModel> {
    let n = k.nrows();
    if k.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: k.ncols(),
        });
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: y.len(),
        });
    }
    if !(params.c > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "C must be positive, got {}",
            params.c
        )));
    }
    let pos = y.iter().filter(|&&v| v > 0.0).count();
    if pos == 0 || pos == n {
        return Err(Error::InvalidConfig("both classes must be present".into()));
    }
    let c = params.c;

    let mut alpha: Vec<f64> = match warm {
        Some(a) if a.len() == n => a.to_vec(),
        Some(a) => {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: a.len(),
            });
        }
        None => vec![0.0; n],
    };
    // gradient of the minimization form: g_i = Σ_j α_j y_i y_j K_ij − 1
    let mut grad = vec![-1.0; n];
    for j in 0..n {
        if alpha[j] > 0.0 {
            let aj = alpha[j] * y[j];
            for i in 0..n {
                grad[i] += aj * y[i] * k[[i, j]];
            }
        }
    }

    let mut updates = 0usize;
    let gap = loop {
        // maximal violating pair over I_up / I_low
        let mut i_up: Option<usize> = None;
        let mut m_up = f64::NEG_INFINITY;
        let mut j_low: Option<usize> = None;
        let mut m_low = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            let in_up = (y[t] > 0.0 && alpha[t] < c) || (y[t] < 0.0 && alpha[t] > 0.0);
            let in_low = (y[t] > 0.0 && alpha[t] > 0.0) || (y[t] < 0.0 && alpha[t] < c);
            if in_up && v > m_up {
                m_up = v;
                i_up = Some(t);
            }
            if in_low && v < m_low {
                m_low = v;
                j_low = Some(t);
            }
        }
        let (i, j) = match (i_up, j_low) {
            (Some(i), Some(j)) => (i, j),
            _ => break 0.0,
        };
        if m_up - m_low <= params.tol {
            break m_up - m_low;
        }
        if updates >= params.max_updates {
            return Err(Error::NoConvergence {
                residual: m_up - m_low,
            });
        }
        updates += 1;

        let old_i = alpha[i];
        let old_j = alpha[j];
        // curvature along the feasible pair direction is ‖φᵢ − φⱼ‖²
        // regardless of the label pattern
        if (y[i] > 0.0) != (y[j] > 0.0) {
            let mut quad = k[[i, i]] + k[[j, j]] - 2.0 * k[[i, j]];
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = k[[i, i]] + k[[j, j]] - 2.0 * k[[i, j]];
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let di = (alpha[i] - old_i) * y[i];
        let dj = (alpha[j] - old_j) * y[j];
        for t in 0..n {
            grad[t] += y[t] * (di * k[[t, i]] + dj * k[[t, j]]);
        }
    };
    let _ = gap;

    // bias from free vectors, else the midpoint of the feasible interval
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    for t in 0..n {
        if alpha[t] > 0.0 && alpha[t] < c {
            free_sum += -y[t] * grad[t];
            free_count += 1;
        }
    }
    let bias = if free_count > 0 {
        free_sum / free_count as f64
    } else {
        let mut hi = f64::NEG_INFINITY;
        let mut lo = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            let in_up = (y[t] > 0.0 && alpha[t] < c) || (y[t] < 0.0 && alpha[t] > 0.0);
            let in_low = (y[t] > 0.0 && alpha[t] > 0.0) || (y[t] < 0.0 && alpha[t] < c);
            if in_up {
                hi = hi.max(v);
            }
            if in_low {
                lo = lo.min(v);
            }
        }
        (hi + lo) / 2.0
    };

    // W(α) = Σα − ½αᵀQα = ½(Σα − αᵀg)
    let sum_alpha: f64 = alpha.iter().sum();
    let dot_ag: f64 = alpha.iter().zip(&grad).map(|(a, g)| a * g).sum();
    let dual_value = 0.5 * (sum_alpha - dot_ag);

    let sv_indices: Vec<usize> = (0..n).filter(|&t| alpha[t] > SV_EPSILON).collect();
    Ok(SvmModel {
        alpha,
        bias,
        sv_indices,
        c,
        dual_value,
        labels: y.to_vec(),
    })
}

/// Decision values `Σ_i α_i y_i K(x, x_i) + b` for rows of a cross-kernel
/// matrix whose columns follow training order.
pub fn decision_values(model: &SvmModel, k_cross: &Array2<f64>) -> Result<Array1<f64>> {
    let n = model.n();
    if k_cross.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: k_cross.ncols(),
        });
    }
    let mut out = Array1::zeros(k_cross.nrows());
    for r in 0..k_cross.nrows() {
        let mut v = model.bias;
        for &i in &model.sv_indices {
            v += model.alpha[i] * model.labels[i] * k_cross[[r, i]];
        }
        out[r] = v;
    }
    Ok(out)
}

/// Predicted labels; an exact zero decision value resolves to `+1`.
pub fn predict(model: &SvmModel, k_cross: &Array2<f64>) -> Result<Array1<f64>> {
    Ok(decision_values(model, k_cross)?.map(|&v| if v < 0.0 { -1.0 } else { 1.0 }))
}

/// Gradient of the dual value with respect to a kernel parameter, at
/// fixed α: `∂W/∂θ = −½ Σ_{i,j} α_i α_j y_i y_j ∂K_ij/∂θ`.
pub fn dual_grad_theta(model: &SvmModel, dk: &Array2<f64>) -> Result<f64> {
    let n = model.n();
    if dk.nrows() != n || dk.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: dk.nrows().max(dk.ncols()),
        });
    }
    let mut acc = 0.0;
    for &i in &model.sv_indices {
        let ai = model.alpha[i] * model.labels[i];
        for &j in &model.sv_indices {
            acc += ai * model.alpha[j] * model.labels[j] * dk[[i, j]];
        }
    }
    Ok(-0.5 * acc)
}
