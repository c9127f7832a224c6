//! The deep multiple kernel architecture: weighted per-set combinations of
//! base kernels, stacked in layers with unit-hypersphere normalization at
//! every step, plus exact derivatives of every output Gram entry with
//! respect to every combination weight.
//!
//! Weight layout (flat, layer-major): the first layer holds `h×m` weights,
//! each of the `l−2` middle layers holds `h×h×m` (output set, input set,
//! kernel), and the last layer holds `h×m`. A one-layer architecture has a
//! single `h×m` block whose set outputs are averaged into one kernel.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{self, KernelSpec};

/// Architecture shape and its non-negative combination weights.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchConfig {
    layers: usize,
    sets: usize,
    specs: Vec<KernelSpec>,
    theta: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArchConfigRepr {
    layers: usize,
    sets: usize,
    kernels: Vec<KernelSpec>,
    #[serde(default = "uniform_init")]
    theta_init: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    theta: Option<Vec<f64>>,
}

fn uniform_init() -> String {
    "uniform".to_string()
}

impl Serialize for ArchConfig {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ArchConfigRepr {
            layers: self.layers,
            sets: self.sets,
            kernels: self.specs.clone(),
            theta_init: uniform_init(),
            theta: Some(self.theta.clone()),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for ArchConfig {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let repr = ArchConfigRepr::deserialize(de)?;
        if repr.theta_init != "uniform" {
            return Err(serde::de::Error::custom(format!(
                "unsupported theta_init {:?}",
                repr.theta_init
            )));
        }
        let mut cfg = ArchConfig::new(repr.layers, repr.sets, repr.kernels)
            .map_err(serde::de::Error::custom)?;
        if let Some(theta) = repr.theta {
            cfg.set_theta(theta).map_err(serde::de::Error::custom)?;
        }
        Ok(cfg)
    }
}

impl ArchConfig {
    /// Build an architecture with every weight initialized to `1/m`.
    pub fn new(layers: usize, sets: usize, specs: Vec<KernelSpec>) -> Result<Self> {
        if layers < 1 {
            return Err(Error::InvalidConfig("layers must be >= 1".into()));
        }
        if sets < 1 {
            return Err(Error::InvalidConfig("sets must be >= 1".into()));
        }
        if specs.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one kernel is required".into(),
            ));
        }
        for spec in &specs {
            spec.validate()?;
        }
        let m = specs.len();
        let count = weight_count(layers, sets, m);
        let theta = vec![1.0 / m as f64; count];
        Ok(ArchConfig {
            layers,
            sets,
            specs,
            theta,
        })
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn sets(&self) -> usize {
        self.sets
    }

    pub fn kernel_count(&self) -> usize {
        self.specs.len()
    }

    pub fn specs(&self) -> &[KernelSpec] {
        &self.specs
    }

    pub fn weight_count(&self) -> usize {
        self.theta.len()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn theta_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    /// Replace the weight vector, validating length and non-negativity.
    pub fn set_theta(&mut self, theta: Vec<f64>) -> Result<()> {
        if theta.len() != self.theta.len() {
            return Err(Error::DimensionMismatch {
                expected: self.theta.len(),
                got: theta.len(),
            });
        }
        if theta.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidConfig(
                "weights must be finite and non-negative".into(),
            ));
        }
        self.theta = theta;
        Ok(())
    }

    /// Which base kernel a flat weight index belongs to (all blocks are
    /// kernel-minor, so this is position-within-block mod m).
    pub fn kernel_of(&self, flat: usize) -> usize {
        flat % self.specs.len()
    }

    // -- flat offsets -------------------------------------------------

    fn idx_first(&self, set: usize, k: usize) -> usize {
        set * self.specs.len() + k
    }

    fn idx_middle(&self, mb: usize, set_out: usize, set_in: usize, k: usize) -> usize {
        let (h, m) = (self.sets, self.specs.len());
        h * m + mb * h * h * m + (set_out * h + set_in) * m + k
    }

    fn idx_last(&self, set_in: usize, k: usize) -> usize {
        let (h, m) = (self.sets, self.specs.len());
        h * m + (self.layers - 2) * h * h * m + set_in * m + k
    }
}

/// `(l−2)h²m + 2hm` free weights for `l ≥ 2`, `hm` for `l = 1`.
pub fn weight_count(layers: usize, sets: usize, kernels: usize) -> usize {
    if layers == 1 {
        sets * kernels
    } else {
        (layers - 2) * sets * sets * kernels + 2 * sets * kernels
    }
}

/// Everything one forward pass computed: per-layer, per-set raw and
/// normalized Grams, the base Grams that fed layer one, and the final
/// combined kernel. Gradients reuse these instead of re-evaluating.
#[derive(Debug, Clone)]
pub struct GramStack {
    base: Vec<Array2<f64>>,
    set_raw: Vec<Vec<Array2<f64>>>,
    set_norm: Vec<Vec<Array2<f64>>>,
    final_raw: Array2<f64>,
    final_gram: Array2<f64>,
    layers: usize,
    sets: usize,
}

impl GramStack {
    /// The output Gram `K^{(l)}`.
    pub fn final_gram(&self) -> &Array2<f64> {
        &self.final_gram
    }

    pub fn n(&self) -> usize {
        self.final_gram.nrows()
    }

    /// Normalized Gram of one set at one layer (layer index over the
    /// set-bearing layers, i.e. all but the combined output).
    pub fn set_norm(&self, layer: usize, set: usize) -> &Array2<f64> {
        &self.set_norm[layer][set]
    }
}

fn check_matches(config: &ArchConfig, stack: &GramStack) -> Result<()> {
    if stack.layers != config.layers || stack.sets != config.sets {
        return Err(Error::InvalidConfig(
            "gram stack was produced by a different architecture".into(),
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------
// forward

/// Compute the full Gram stack of the architecture over the rows of `x`.
pub fn forward(config: &ArchConfig, x: &Array2<f64>) -> Result<GramStack> {
    let n = x.nrows();
    if n == 0 {
        return Err(Error::TooFewRows { needed: 1, got: 0 });
    }
    let l = config.layers;
    let h = config.sets;
    let base = base_grams(config, x)?;

    let mut set_raw: Vec<Vec<Array2<f64>>> = Vec::new();
    let mut set_norm: Vec<Vec<Array2<f64>>> = Vec::new();

    // layer 1: weighted sums of base Grams
    let mut raws = Vec::with_capacity(h);
    let mut norms = Vec::with_capacity(h);
    for s in 0..h {
        let mut raw = Array2::zeros((n, n));
        for (k, g) in base.iter().enumerate() {
            let w = config.theta[config.idx_first(s, k)];
            raw.scaled_add(w, g);
        }
        let norm = normalize(&raw, 1, s)?;
        raws.push(raw);
        norms.push(norm);
    }
    set_raw.push(raws);
    set_norm.push(norms);

    if l == 1 {
        // average the h normalized set Grams, then re-normalize
        let mut avg = Array2::zeros((n, n));
        for norm in &set_norm[0] {
            avg.scaled_add(1.0 / h as f64, norm);
        }
        let final_gram = normalize(&avg, 1, usize::MAX)?;
        return Ok(GramStack {
            base,
            set_raw,
            set_norm,
            final_raw: avg,
            final_gram,
            layers: l,
            sets: h,
        });
    }

    // middle layers
    for mb in 0..l - 2 {
        let prev = &set_norm[mb];
        let mut raws = Vec::with_capacity(h);
        let mut norms = Vec::with_capacity(h);
        for s_out in 0..h {
            let mut raw = Array2::zeros((n, n));
            for s_in in 0..h {
                for (k, spec) in config.specs.iter().enumerate() {
                    let w = config.theta[config.idx_middle(mb, s_out, s_in, k)];
                    compose_into(&mut raw, w, spec, &prev[s_in], mb + 2, s_out)?;
                }
            }
            let norm = normalize(&raw, mb + 2, s_out)?;
            raws.push(raw);
            norms.push(norm);
        }
        set_raw.push(raws);
        set_norm.push(norms);
    }

    // output layer: one combined kernel over all sets
    let prev = &set_norm[l - 2];
    let mut final_raw = Array2::zeros((n, n));
    for s_in in 0..h {
        for (k, spec) in config.specs.iter().enumerate() {
            let w = config.theta[config.idx_last(s_in, k)];
            compose_into(&mut final_raw, w, spec, &prev[s_in], l, 0)?;
        }
    }
    let final_gram = normalize(&final_raw, l, usize::MAX)?;
    Ok(GramStack {
        base,
        set_raw,
        set_norm,
        final_raw,
        final_gram,
        layers: l,
        sets: h,
    })
}

fn base_grams(config: &ArchConfig, x: &Array2<f64>) -> Result<Vec<Array2<f64>>> {
    let n = x.nrows();
    let mut grams = Vec::with_capacity(config.specs.len());
    for spec in &config.specs {
        let mut g = Array2::zeros((n, n));
        for i in 0..n {
            let xi = x.row(i);
            for j in i..n {
                let v =
                    kernels::base_eval(spec, xi.as_slice().unwrap(), x.row(j).as_slice().unwrap())?;
                g[[i, j]] = v;
                g[[j, i]] = v;
            }
        }
        grams.push(g);
    }
    Ok(grams)
}

/// `raw += w · C_spec(prev)` entrywise, failing on non-finite values.
fn compose_into(
    raw: &mut Array2<f64>,
    w: f64,
    spec: &KernelSpec,
    prev: &Array2<f64>,
    layer: usize,
    set: usize,
) -> Result<()> {
    let n = prev.nrows();
    for i in 0..n {
        for j in i..n {
            let v = kernels::compose_eval(spec, prev[[i, j]]);
            if !v.is_finite() {
                return Err(Error::Numeric {
                    context: format!("layer {layer}, set {set}, kernel {}", spec.name()),
                });
            }
            raw[[i, j]] += w * v;
            if i != j {
                raw[[j, i]] = raw[[i, j]];
            }
        }
    }
    Ok(())
}

/// Unit-hypersphere normalization `N_ij = R_ij / √(R_ii·R_jj)`.
/// `set == usize::MAX` labels the combined output in error contexts.
fn normalize(raw: &Array2<f64>, layer: usize, set: usize) -> Result<Array2<f64>> {
    let n = raw.nrows();
    let context = || {
        if set == usize::MAX {
            format!("layer {layer}, combined output")
        } else {
            format!("layer {layer}, set {set}")
        }
    };
    let mut inv = Vec::with_capacity(n);
    for i in 0..n {
        let d = raw[[i, i]];
        if !(d > 1e-300) || !d.is_finite() {
            return Err(Error::Numeric {
                context: format!("{}: non-positive diagonal entry {d:e}", context()),
            });
        }
        inv.push(1.0 / d.sqrt());
    }
    let mut norm = Array2::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let v = raw[[i, j]] * inv[i] * inv[j];
            if !v.is_finite() {
                return Err(Error::Numeric { context: context() });
            }
            norm[[i, j]] = v;
            norm[[j, i]] = v;
        }
    }
    Ok(norm)
}

// ---------------------------------------------------------------------
// gradients

/// Derivative of the final Gram with respect to every weight, in flat
/// weight order. One reverse sweep builds per-layer sensitivity fields
/// from the cached stack; each weight then costs a single `O(n²)`
/// injection through the normalization quotient rule.
pub fn grad_theta(config: &ArchConfig, stack: &GramStack) -> Result<Vec<Array2<f64>>> {
    check_matches(config, stack)?;
    let n = stack.n();
    let l = config.layers;
    let h = config.sets;
    let m = config.specs.len();
    let mut out = Vec::with_capacity(config.weight_count());

    if l == 1 {
        // K = normalize(average of set norms); the averaged matrix has a
        // unit diagonal, so its quotient contributes only the direct term.
        let scale = inv_sqrt_pairs(&stack.final_raw);
        for s in 0..h {
            for k in 0..m {
                let dn = quotient_rule(&stack.base[k], &stack.set_raw[0][s], &stack.set_norm[0][s]);
                let mut d = Array2::zeros((n, n));
                for i in 0..n {
                    for j in 0..n {
                        d[[i, j]] = scale[[i, j]] / h as f64 * dn[[i, j]];
                    }
                }
                out.push(d);
            }
        }
        return Ok(out);
    }

    // Sensitivity of each final-Gram entry to the matching entry of every
    // set's normalized Gram. Diagonal perturbations of deeper layers
    // vanish (normalized self-similarity is identically one), so only the
    // entrywise path survives past the injection layer.
    let mut adj: Vec<Vec<Array2<f64>>> = vec![Vec::new(); l - 1];
    let scale_out = inv_sqrt_pairs(&stack.final_raw);
    for s_in in 0..h {
        let prev = &stack.set_norm[l - 2][s_in];
        let mut a = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                let mut c = 0.0;
                for (k, spec) in config.specs.iter().enumerate() {
                    let w = config.theta[config.idx_last(s_in, k)];
                    c += w * kernels::compose_deriv(spec, prev[[i, j]]);
                }
                a[[i, j]] = scale_out[[i, j]] * c;
            }
        }
        adj[l - 2].push(a);
    }
    for t in (0..l - 2).rev() {
        for s_prev in 0..h {
            let prev = &stack.set_norm[t][s_prev];
            let mut acc = Array2::zeros((n, n));
            for s in 0..h {
                let scale = inv_sqrt_pairs(&stack.set_raw[t + 1][s]);
                for i in 0..n {
                    for j in 0..n {
                        let mut c = 0.0;
                        for (k, spec) in config.specs.iter().enumerate() {
                            let w = config.theta[config.idx_middle(t, s, s_prev, k)];
                            c += w * kernels::compose_deriv(spec, prev[[i, j]]);
                        }
                        acc[[i, j]] += adj[t + 1][s][[i, j]] * scale[[i, j]] * c;
                    }
                }
            }
            adj[t].push(acc);
        }
    }

    // first-layer injections: dR = base Gram
    for s in 0..h {
        for k in 0..m {
            let dn = quotient_rule(&stack.base[k], &stack.set_raw[0][s], &stack.set_norm[0][s]);
            out.push(hadamard(&adj[0][s], &dn));
        }
    }
    // middle-layer injections: dR = composed previous set
    for mb in 0..l - 2 {
        let t_out = mb + 1;
        for s_out in 0..h {
            for s_in in 0..h {
                for spec in &config.specs {
                    let dr = compose_matrix(spec, &stack.set_norm[t_out - 1][s_in]);
                    let dn = quotient_rule(
                        &dr,
                        &stack.set_raw[t_out][s_out],
                        &stack.set_norm[t_out][s_out],
                    );
                    out.push(hadamard(&adj[t_out][s_out], &dn));
                }
            }
        }
    }
    // output-layer injections act directly through the final quotient
    for s_in in 0..h {
        for spec in &config.specs {
            let dr = compose_matrix(spec, &stack.set_norm[l - 2][s_in]);
            out.push(quotient_rule(&dr, &stack.final_raw, &stack.final_gram));
        }
    }
    Ok(out)
}

/// `1/√(R_ii·R_jj)` for every entry.
fn inv_sqrt_pairs(raw: &Array2<f64>) -> Array2<f64> {
    let n = raw.nrows();
    let inv: Vec<f64> = (0..n).map(|i| 1.0 / raw[[i, i]].sqrt()).collect();
    Array2::from_shape_fn((n, n), |(i, j)| inv[i] * inv[j])
}

/// Derivative of the normalization `N = R/√(R_ii R_jj)` for a raw-Gram
/// perturbation `dR` (diagonal included):
/// `dN_ij = dR_ij/√(R_ii R_jj) − (N_ij/2)(dR_ii/R_ii + dR_jj/R_jj)`.
fn quotient_rule(dr: &Array2<f64>, raw: &Array2<f64>, norm: &Array2<f64>) -> Array2<f64> {
    let n = raw.nrows();
    let inv: Vec<f64> = (0..n).map(|i| 1.0 / raw[[i, i]].sqrt()).collect();
    let rel: Vec<f64> = (0..n).map(|i| dr[[i, i]] / raw[[i, i]]).collect();
    let mut dn = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            dn[[i, j]] = dr[[i, j]] * inv[i] * inv[j] - 0.5 * norm[[i, j]] * (rel[i] + rel[j]);
        }
    }
    dn
}

fn compose_matrix(spec: &KernelSpec, prev: &Array2<f64>) -> Array2<f64> {
    prev.map(|&v| kernels::compose_eval(spec, v))
}

fn hadamard(a: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    a * b
}

// ---------------------------------------------------------------------
// cross-Grams

/// Kernel matrix between test rows and training rows through the same
/// stack: entry `(i, j)` is `K^{(l)}(test_i, train_j)`. Normalization
/// scale factors come from each point's own self-similarity carried
/// through the layers.
pub fn forward_cross(
    config: &ArchConfig,
    x_train: &Array2<f64>,
    x_test: &Array2<f64>,
) -> Result<Array2<f64>> {
    if x_train.ncols() != x_test.ncols() {
        return Err(Error::DimensionMismatch {
            expected: x_train.ncols(),
            got: x_test.ncols(),
        });
    }
    let nt = x_test.nrows();
    let ntr = x_train.nrows();
    if nt == 0 || ntr == 0 {
        return Err(Error::TooFewRows { needed: 1, got: 0 });
    }
    let l = config.layers;
    let h = config.sets;
    let m = config.specs.len();

    // base streams: cross matrix plus each side's self-similarities
    let mut base_cross = Vec::with_capacity(m);
    let mut base_dt = Vec::with_capacity(m);
    let mut base_dtr = Vec::with_capacity(m);
    for spec in &config.specs {
        let mut c = Array2::zeros((nt, ntr));
        for i in 0..nt {
            let zi = x_test.row(i);
            for j in 0..ntr {
                c[[i, j]] = kernels::base_eval(
                    spec,
                    zi.as_slice().unwrap(),
                    x_train.row(j).as_slice().unwrap(),
                )?;
            }
        }
        let dt: Vec<f64> = (0..nt)
            .map(|i| {
                let r = x_test.row(i);
                kernels::base_eval(spec, r.as_slice().unwrap(), r.as_slice().unwrap())
            })
            .collect::<Result<_>>()?;
        let dtr: Vec<f64> = (0..ntr)
            .map(|j| {
                let r = x_train.row(j);
                kernels::base_eval(spec, r.as_slice().unwrap(), r.as_slice().unwrap())
            })
            .collect::<Result<_>>()?;
        base_cross.push(c);
        base_dt.push(dt);
        base_dtr.push(dtr);
    }

    let combine_first = |idx: &dyn Fn(usize) -> usize| -> (Array2<f64>, Vec<f64>, Vec<f64>) {
        let mut c = Array2::zeros((nt, ntr));
        let mut dt = vec![0.0; nt];
        let mut dtr = vec![0.0; ntr];
        for k in 0..m {
            let w = config.theta[idx(k)];
            c.scaled_add(w, &base_cross[k]);
            for i in 0..nt {
                dt[i] += w * base_dt[k][i];
            }
            for j in 0..ntr {
                dtr[j] += w * base_dtr[k][j];
            }
        }
        (c, dt, dtr)
    };

    // layer 1
    let mut cross: Vec<Array2<f64>> = Vec::with_capacity(h);
    for s in 0..h {
        let (raw_c, raw_dt, raw_dtr) = combine_first(&|k| config.idx_first(s, k));
        cross.push(normalize_cross(&raw_c, &raw_dt, &raw_dtr, 1, s)?);
    }

    if l == 1 {
        // averaged normalized sets already have unit self-similarity
        let mut avg = Array2::zeros((nt, ntr));
        for c in &cross {
            avg.scaled_add(1.0 / h as f64, c);
        }
        return Ok(avg);
    }

    let compose_layer = |prev: &[Array2<f64>],
                         idx: &dyn Fn(usize, usize) -> usize,
                         layer: usize,
                         set: usize|
     -> Result<(Array2<f64>, Vec<f64>, Vec<f64>)> {
        let mut raw_c = Array2::zeros((nt, ntr));
        let mut dt = vec![0.0; nt];
        let mut dtr = vec![0.0; ntr];
        for s_in in 0..h {
            for (k, spec) in config.specs.iter().enumerate() {
                let w = config.theta[idx(s_in, k)];
                for i in 0..nt {
                    for j in 0..ntr {
                        let v = kernels::compose_eval(spec, prev[s_in][[i, j]]);
                        if !v.is_finite() {
                            return Err(Error::Numeric {
                                context: format!(
                                    "layer {layer}, set {set}, kernel {}",
                                    spec.name()
                                ),
                            });
                        }
                        raw_c[[i, j]] += w * v;
                    }
                }
                // previous normalized self-similarities are all one
                let unit = w * kernels::compose_eval(spec, 1.0);
                for v in dt.iter_mut() {
                    *v += unit;
                }
                for v in dtr.iter_mut() {
                    *v += unit;
                }
            }
        }
        Ok((raw_c, dt, dtr))
    };

    for mb in 0..l - 2 {
        let mut next = Vec::with_capacity(h);
        for s_out in 0..h {
            let (raw_c, dt, dtr) = compose_layer(
                &cross,
                &|s_in, k| config.idx_middle(mb, s_out, s_in, k),
                mb + 2,
                s_out,
            )?;
            next.push(normalize_cross(&raw_c, &dt, &dtr, mb + 2, s_out)?);
        }
        cross = next;
    }

    let (raw_c, dt, dtr) = compose_layer(&cross, &|s_in, k| config.idx_last(s_in, k), l, 0)?;
    normalize_cross(&raw_c, &dt, &dtr, l, usize::MAX)
}

fn normalize_cross(
    raw: &Array2<f64>,
    diag_rows: &[f64],
    diag_cols: &[f64],
    layer: usize,
    set: usize,
) -> Result<Array2<f64>> {
    let context = || {
        if set == usize::MAX {
            format!("layer {layer}, combined output")
        } else {
            format!("layer {layer}, set {set}")
        }
    };
    for d in diag_rows.iter().chain(diag_cols) {
        if !(*d > 1e-300) || !d.is_finite() {
            return Err(Error::Numeric {
                context: format!("{}: non-positive self-similarity {d:e}", context()),
            });
        }
    }
    let inv_r: Vec<f64> = diag_rows.iter().map(|d| 1.0 / d.sqrt()).collect();
    let inv_c: Vec<f64> = diag_cols.iter().map(|d| 1.0 / d.sqrt()).collect();
    let mut norm = Array2::zeros(raw.dim());
    for i in 0..raw.nrows() {
        for j in 0..raw.ncols() {
            let v = raw[[i, j]] * inv_r[i] * inv_c[j];
            if !v.is_finite() {
                return Err(Error::Numeric { context: context() });
            }
            norm[[i, j]] = v;
        }
    }
    Ok(norm)
}
