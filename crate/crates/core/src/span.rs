//! The smoothed span bound: a differentiable estimate of the SVM
//! leave-one-out error over the support vectors, plus its gradient with
//! respect to kernel weights under a fixed support-vector set.
//!
//! The regularized span of support vector `p` has the closed form
//! `S̄_p² = 1/[B⁻¹]_pp − Q_pp` with `B = K̃ + Q`, where `K̃` borders the
//! support-vector Gram with a row and column of ones and `Q` is the
//! diagonal regularizer `η/α_p` (last entry zero). The bound itself is
//! `T_span = Σ_p φ(α_p S̄_p² − 1)` with the sigmoid smoother
//! `φ(x) = 1/(1 + exp(−c·x + d))`.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::svm::SvmModel;

const MAX_CONDITION: f64 = 1e12;

/// Smoothing and regularization constants: `c = 5`, `d = 0`, `η = 0.1`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpanConfig {
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default)]
    pub d_offset: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
}

fn default_c() -> f64 {
    5.0
}
fn default_eta() -> f64 {
    0.1
}

impl Default for SpanConfig {
    fn default() -> Self {
        SpanConfig {
            c: 5.0,
            d_offset: 0.0,
            eta: 0.1,
        }
    }
}

impl SpanConfig {
    pub fn with_eta(eta: f64) -> Self {
        SpanConfig {
            eta,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "smoothing c must be > 0, got {}",
                self.c
            )));
        }
        if !(self.eta > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "eta must be > 0, got {}",
                self.eta
            )));
        }
        Ok(())
    }

    /// The smoothing sigmoid `φ(x) = 1/(1 + exp(−c·x + d))`.
    pub fn phi(&self, x: f64) -> f64 {
        1.0 / (1.0 + (-self.c * x + self.d_offset).exp())
    }

    /// `φ′(x) = c·φ(x)(1 − φ(x))`.
    pub fn phi_prime(&self, x: f64) -> f64 {
        let p = self.phi(x);
        self.c * p * (1.0 - p)
    }
}

/// Matrices shared by every span evaluation and gradient for one model:
/// the bordered support-vector kernel `K̃`, its inverse, the regularizer
/// diagonal `Q`, `B = K̃ + Q` with its inverse, and `G = ∂Q/∂α`.
#[derive(Debug, Clone)]
pub struct SpanWorkspace {
    pub sv: Vec<usize>,
    pub alpha_sv: Array1<f64>,
    pub y_sv: Array1<f64>,
    pub k_tilde: Array2<f64>,
    /// Inverse of `K̃`; its top-left block is the `Ā` of the gradient.
    pub k_tilde_inv: Array2<f64>,
    /// Diagonal of `Q`: `η/α_p` per support vector, last entry 0.
    pub q: Array1<f64>,
    /// Diagonal of `G`: `−η/α_p²` per support vector, last entry 0.
    pub g: Array1<f64>,
    pub b: Array2<f64>,
    pub b_inv: Array2<f64>,
    pub cond_b: f64,
}

impl SpanWorkspace {
    pub fn n_sv(&self) -> usize {
        self.sv.len()
    }
}

/// Assemble the bordered system and its inverses for the model's support
/// vectors. Fails when fewer than two support vectors exist or when `K̃`
/// or `B` is numerically singular.
pub fn build_workspace(
    model: &SvmModel,
    k: &Array2<f64>,
    cfg: &SpanConfig,
) -> Result<SpanWorkspace> {
    cfg.validate()?;
    let n = model.n();
    if k.nrows() != n || k.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: k.nrows().max(k.ncols()),
        });
    }
    let sv = model.sv_indices.clone();
    let nsv = sv.len();
    if nsv < 2 {
        return Err(Error::TooFewSupportVectors { got: nsv });
    }

    let alpha_sv = Array1::from_shape_fn(nsv, |p| model.alpha[sv[p]]);
    let y_sv = Array1::from_shape_fn(nsv, |p| model.labels[sv[p]]);

    let mut k_tilde = Array2::zeros((nsv + 1, nsv + 1));
    for p in 0..nsv {
        for r in 0..nsv {
            k_tilde[[p, r]] = k[[sv[p], sv[r]]];
        }
        k_tilde[[p, nsv]] = 1.0;
        k_tilde[[nsv, p]] = 1.0;
    }

    let (k_tilde_inv, cond_k) = linalg::invert_with_cond(&k_tilde)?;
    if cond_k > MAX_CONDITION {
        return Err(Error::Singular { cond: cond_k });
    }

    let mut q = Array1::zeros(nsv + 1);
    let mut g = Array1::zeros(nsv + 1);
    for p in 0..nsv {
        q[p] = cfg.eta / alpha_sv[p];
        g[p] = -cfg.eta / (alpha_sv[p] * alpha_sv[p]);
    }

    let mut b = k_tilde.clone();
    for p in 0..nsv + 1 {
        b[[p, p]] += q[p];
    }
    let (b_inv, cond_b) = linalg::invert_with_cond(&b)?;
    if cond_b > MAX_CONDITION {
        return Err(Error::Singular { cond: cond_b });
    }

    Ok(SpanWorkspace {
        sv,
        alpha_sv,
        y_sv,
        k_tilde,
        k_tilde_inv,
        q,
        g,
        b,
        b_inv,
        cond_b,
    })
}

/// The regularized smoothed span `S̄_p² = 1/[B⁻¹]_pp − Q_pp` for support
/// vector `p` (index within the workspace's support-vector order).
pub fn smoothed_span_sq(ws: &SpanWorkspace, p: usize) -> Result<f64> {
    if p >= ws.n_sv() {
        return Err(Error::DimensionMismatch {
            expected: ws.n_sv(),
            got: p,
        });
    }
    let bpp = ws.b_inv[[p, p]];
    if !(bpp > 0.0) {
        return Err(Error::Numeric {
            context: format!("span workspace: [B⁻¹]_pp = {bpp:e} at support vector {p}"),
        });
    }
    Ok(1.0 / bpp - ws.q[p])
}

/// The smoothed span bound `T_span = Σ_p φ(α_p S̄_p² − 1)`.
pub fn t_span(model: &SvmModel, ws: &SpanWorkspace, cfg: &SpanConfig) -> Result<f64> {
    let _ = model;
    let mut sum = 0.0;
    for p in 0..ws.n_sv() {
        let s2 = smoothed_span_sq(ws, p)?;
        sum += cfg.phi(ws.alpha_sv[p] * s2 - 1.0);
    }
    Ok(sum)
}

/// Per-support-vector span derivatives and the total bound derivative for
/// one kernel-weight direction `dK = ∂K/∂θ_k` (full training Gram shape).
///
/// The support-vector set is treated as fixed. The dual coefficients vary
/// with θ through the bordered KKT system, `dβ̃ = −K̃⁻¹·∂K̃·β̃` with
/// `β = Y_sv α_sv`, which feeds both the regularizer derivative
/// `∂Q = G·∂α` inside `∂B` and the `S̄_p²·∂α_p` term of the bound.
pub fn span_grad(
    ws: &SpanWorkspace,
    dk_full: &Array2<f64>,
    model: &SvmModel,
    cfg: &SpanConfig,
) -> Result<(Array1<f64>, f64)> {
    let n = model.n();
    if dk_full.nrows() != n || dk_full.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: dk_full.nrows().max(dk_full.ncols()),
        });
    }
    let nsv = ws.n_sv();
    let dk_sv = Array2::from_shape_fn((nsv, nsv), |(p, r)| dk_full[[ws.sv[p], ws.sv[r]]]);

    let d_alpha = alpha_derivative(ws, &dk_sv);

    // ∂B = ∂K̃ + diag(G·∂α), with ∂K̃ the zero-bordered ∂K_sv
    let mut db = Array2::zeros((nsv + 1, nsv + 1));
    for p in 0..nsv {
        for r in 0..nsv {
            db[[p, r]] = dk_sv[[p, r]];
        }
        db[[p, p]] += ws.g[p] * d_alpha[p];
    }

    // diag(B⁻¹·∂B·B⁻¹) via U = B⁻¹·∂B
    let u = ws.b_inv.dot(&db);
    let mut ds2 = Array1::zeros(nsv);
    let mut dt = 0.0;
    for p in 0..nsv {
        let mut m_pp = 0.0;
        for j in 0..nsv + 1 {
            m_pp += u[[p, j]] * ws.b_inv[[j, p]];
        }
        let bpp = ws.b_inv[[p, p]];
        let dq_p = ws.g[p] * d_alpha[p];
        let d = m_pp / (bpp * bpp) - dq_p;
        ds2[p] = d;

        let s2 = 1.0 / bpp - ws.q[p];
        let u_p = ws.alpha_sv[p] * s2 - 1.0;
        dt += cfg.phi_prime(u_p) * (ws.alpha_sv[p] * d + s2 * d_alpha[p]);
    }
    Ok((ds2, dt))
}

/// Total-bound derivatives `∂T_span/∂θ_k` for many weight directions at
/// once. Algebraically identical to calling [`span_grad`] per direction,
/// but the shared `B⁻¹`-sandwich is folded into one weighting matrix so
/// each direction costs a single Frobenius product.
pub fn span_grad_batch(
    ws: &SpanWorkspace,
    dks: &[Array2<f64>],
    model: &SvmModel,
    cfg: &SpanConfig,
) -> Result<Vec<f64>> {
    let n = model.n();
    let nsv = ws.n_sv();

    // per-SV weights of the two dT terms
    let mut c = Array1::zeros(nsv + 1);
    let mut phi_alpha = Array1::zeros(nsv);
    let mut s2_term = Array1::zeros(nsv);
    for p in 0..nsv {
        let bpp = ws.b_inv[[p, p]];
        if !(bpp > 0.0) {
            return Err(Error::Numeric {
                context: format!("span workspace: [B⁻¹]_pp = {bpp:e} at support vector {p}"),
            });
        }
        let s2 = 1.0 / bpp - ws.q[p];
        let phi_p = cfg.phi_prime(ws.alpha_sv[p] * s2 - 1.0);
        c[p] = phi_p * ws.alpha_sv[p] / (bpp * bpp);
        phi_alpha[p] = phi_p * ws.alpha_sv[p];
        s2_term[p] = phi_p * s2;
    }

    // Z = B⁻¹·diag(c)·B⁻¹ collects Σ_p c_p·[B⁻¹·∂B·B⁻¹]_pp = ⟨Z, ∂B⟩
    let mut z = Array2::zeros((nsv + 1, nsv + 1));
    for i in 0..nsv + 1 {
        for j in 0..nsv + 1 {
            let mut acc = 0.0;
            for p in 0..nsv {
                acc += ws.b_inv[[i, p]] * c[p] * ws.b_inv[[p, j]];
            }
            z[[i, j]] = acc;
        }
    }

    // coefficient of ∂α_p across all three appearances, then folded into
    // a rank-one kernel-direction weight via ∂α = −Y·Ā·∂K_sv·Y·α
    let mut w_alpha = Array1::zeros(nsv);
    for p in 0..nsv {
        w_alpha[p] = (z[[p, p]] - phi_alpha[p]) * ws.g[p] + s2_term[p];
    }
    let yw = Array1::from_shape_fn(nsv, |p| ws.y_sv[p] * w_alpha[p]);
    let mut u = Array1::zeros(nsv);
    for p in 0..nsv {
        let mut acc = 0.0;
        for r in 0..nsv {
            acc += ws.k_tilde_inv[[p, r]] * yw[r];
        }
        u[p] = acc;
    }
    let y_alpha = Array1::from_shape_fn(nsv, |p| ws.y_sv[p] * ws.alpha_sv[p]);

    // combined weight matrix: ⟨weight, ∂K_sv⟩ per direction
    let mut weight = Array2::zeros((nsv, nsv));
    for p in 0..nsv {
        for r in 0..nsv {
            weight[[p, r]] = z[[p, r]] - u[p] * y_alpha[r];
        }
    }

    let mut out = Vec::with_capacity(dks.len());
    for dk in dks {
        if dk.nrows() != n || dk.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: dk.nrows().max(dk.ncols()),
            });
        }
        let mut acc = 0.0;
        for p in 0..nsv {
            for r in 0..nsv {
                acc += weight[[p, r]] * dk[[ws.sv[p], ws.sv[r]]];
            }
        }
        out.push(acc);
    }
    Ok(out)
}

/// `∂α` from the frozen-SV bordered system: `dβ̃ = −K̃⁻¹·∂K̃·β̃` with
/// `β = Y α`, then `∂α = Y·dβ`.
fn alpha_derivative(ws: &SpanWorkspace, dk_sv: &Array2<f64>) -> Array1<f64> {
    let nsv = ws.n_sv();
    let beta = Array1::from_shape_fn(nsv, |p| ws.y_sv[p] * ws.alpha_sv[p]);
    let v = dk_sv.dot(&beta);
    // rows 0..nsv of K̃⁻¹ applied to the zero-extended v
    let mut d_alpha = Array1::zeros(nsv);
    for p in 0..nsv {
        let mut acc = 0.0;
        for r in 0..nsv {
            acc += ws.k_tilde_inv[[p, r]] * v[r];
        }
        d_alpha[p] = -ws.y_sv[p] * acc;
    }
    d_alpha
}
