//! The four base kernels in two guises: direct evaluation on feature
//! vectors (first layer) and composition on a previous layer's kernel
//! value (deeper layers), plus the composition derivatives used by
//! chain-rule backpropagation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn default_gamma() -> f64 {
    1.0
}
fn default_sigmoid_alpha() -> f64 {
    -1e-4
}
fn default_beta() -> f64 {
    1.0
}
fn default_poly_alpha() -> f64 {
    1.0
}
fn default_degree() -> u32 {
    2
}

/// A base kernel kind with its hyperparameters.
///
/// Defaults follow the standard roster: RBF `γ=1`, sigmoid `α=-1e-4, β=1`,
/// polynomial `α=1, β=1, δ=2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum KernelSpec {
    Linear,
    Rbf {
        #[serde(default = "default_gamma")]
        gamma: f64,
    },
    Sigmoid {
        #[serde(default = "default_sigmoid_alpha")]
        alpha: f64,
        #[serde(default = "default_beta")]
        beta: f64,
    },
    Polynomial {
        #[serde(default = "default_poly_alpha")]
        alpha: f64,
        #[serde(default = "default_beta")]
        beta: f64,
        #[serde(default = "default_degree")]
        delta: u32,
    },
}

impl KernelSpec {
    pub fn rbf(gamma: f64) -> Self {
        KernelSpec::Rbf { gamma }
    }

    pub fn sigmoid(alpha: f64, beta: f64) -> Self {
        KernelSpec::Sigmoid { alpha, beta }
    }

    pub fn polynomial(alpha: f64, beta: f64, delta: u32) -> Self {
        KernelSpec::Polynomial { alpha, beta, delta }
    }

    /// The four-kernel roster used by the benchmark protocol: linear,
    /// RBF(γ=1), sigmoid(α=-1e-4, β=1), polynomial(α=1, β=1, δ=2).
    pub fn default_roster() -> Vec<KernelSpec> {
        vec![
            KernelSpec::Linear,
            KernelSpec::Rbf { gamma: 1.0 },
            KernelSpec::Sigmoid {
                alpha: -1e-4,
                beta: 1.0,
            },
            KernelSpec::Polynomial {
                alpha: 1.0,
                beta: 1.0,
                delta: 2,
            },
        ]
    }

    /// Short name for error contexts and reports.
    pub fn name(&self) -> &'static str {
        match self {
            KernelSpec::Linear => "linear",
            KernelSpec::Rbf { .. } => "rbf",
            KernelSpec::Sigmoid { .. } => "sigmoid",
            KernelSpec::Polynomial { .. } => "polynomial",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Rbf { gamma } if !(gamma > 0.0) => Err(Error::InvalidConfig(format!(
                "rbf gamma must be > 0, got {gamma}"
            ))),
            KernelSpec::Polynomial { delta, .. } if delta < 1 => {
                Err(Error::InvalidConfig("polynomial delta must be >= 1".into()))
            }
            _ => Ok(()),
        }
    }
}

/// Evaluate a base kernel on two feature vectors.
pub fn base_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let v = match *spec {
        KernelSpec::Linear => dot(x, y),
        KernelSpec::Rbf { gamma } => {
            let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
            (-gamma * d2).exp()
        }
        KernelSpec::Sigmoid { alpha, beta } => (alpha * dot(x, y) + beta).tanh(),
        KernelSpec::Polynomial { alpha, beta, delta } => {
            (alpha * dot(x, y) + beta).powi(delta as i32)
        }
    };
    if !v.is_finite() {
        return Err(Error::Numeric {
            context: format!("{} base kernel", spec.name()),
        });
    }
    Ok(v)
}

/// Evaluate a kernel's composition form on a previous-layer kernel value.
///
/// Linear passes the value through unchanged; RBF uses the unit-diagonal
/// identity `exp(-2γ(1-k))`; sigmoid and polynomial substitute `k` for the
/// dot product.
pub fn compose_eval(spec: &KernelSpec, k_prev: f64) -> f64 {
    match *spec {
        KernelSpec::Linear => k_prev,
        KernelSpec::Rbf { gamma } => (-2.0 * gamma * (1.0 - k_prev)).exp(),
        KernelSpec::Sigmoid { alpha, beta } => (alpha * k_prev + beta).tanh(),
        KernelSpec::Polynomial { alpha, beta, delta } => (alpha * k_prev + beta).powi(delta as i32),
    }
}

/// Derivative of [`compose_eval`] with respect to its kernel input.
pub fn compose_deriv(spec: &KernelSpec, k_prev: f64) -> f64 {
    match *spec {
        KernelSpec::Linear => 1.0,
        KernelSpec::Rbf { gamma } => 2.0 * gamma * (-2.0 * gamma * (1.0 - k_prev)).exp(),
        KernelSpec::Sigmoid { alpha, beta } => {
            let t = (alpha * k_prev + beta).tanh();
            alpha * (1.0 - t * t)
        }
        KernelSpec::Polynomial { alpha, beta, delta } => {
            alpha * delta as f64 * (alpha * k_prev + beta).powi(delta as i32 - 1)
        }
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn roster() -> Vec<KernelSpec> {
        KernelSpec::default_roster()
    }

    #[test]
    fn linear_dot_product() {
        let v = base_eval(&KernelSpec::Linear, &[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert_eq!(v, 11.0);
    }

    #[test]
    fn rbf_at_identical_points() {
        let v = base_eval(&KernelSpec::rbf(1.0), &[0.3, -0.7], &[0.3, -0.7]).unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn polynomial_orthogonal_points() {
        let v = base_eval(
            &KernelSpec::polynomial(1.0, 1.0, 2),
            &[1.0, 0.0],
            &[0.0, 1.0],
        )
        .unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn sigmoid_at_zero_dot() {
        let v = base_eval(&KernelSpec::sigmoid(-1e-4, 1.0), &[1.0, 0.0], &[0.0, 1.0]).unwrap();
        assert!((v - 1.0f64.tanh()).abs() < 1e-12);
        assert!((v - 0.7615941559557649).abs() < 1e-10);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let r = base_eval(&KernelSpec::Linear, &[1.0], &[1.0, 2.0]);
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn compose_linear_is_identity() {
        assert_eq!(compose_eval(&KernelSpec::Linear, 0.3), 0.3);
        assert_eq!(compose_deriv(&KernelSpec::Linear, -0.9), 1.0);
    }

    #[test]
    fn compose_rbf_fixed_point_at_one() {
        assert_eq!(compose_eval(&KernelSpec::rbf(1.0), 1.0), 1.0);
        assert!((compose_deriv(&KernelSpec::rbf(1.0), 1.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn compose_polynomial_values() {
        let p = KernelSpec::polynomial(1.0, 1.0, 2);
        assert_eq!(compose_eval(&p, 1.0), 4.0);
        assert!((compose_deriv(&p, 0.0) - 2.0).abs() < 1e-12);
    }

    /// Central finite difference of `compose_eval`.
    fn fd_compose(spec: &KernelSpec, k: f64, h: f64) -> f64 {
        (compose_eval(spec, k + h) - compose_eval(spec, k - h)) / (2.0 * h)
    }

    #[test]
    fn compose_deriv_matches_finite_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for spec in roster() {
            for _ in 0..1000 {
                let k = rng.gen_range(-1.0..1.0);
                let analytic = compose_deriv(&spec, k);
                let fd = fd_compose(&spec, k, 1e-6);
                let rel = (analytic - fd).abs() / analytic.abs().max(1.0);
                assert!(
                    rel < 1e-5,
                    "{}: k={k} analytic={analytic} fd={fd}",
                    spec.name()
                );
            }
        }
    }

    #[test]
    fn rbf_compose_maps_into_unit_interval() {
        let spec = KernelSpec::rbf(1.0);
        for i in 0..=200 {
            let k = -1.0 + i as f64 / 100.0;
            let v = compose_eval(&spec, k);
            assert!(v > 0.0 && v <= 1.0, "k={k} v={v}");
        }
    }

    #[test]
    fn roster_serde_roundtrip() {
        let json = serde_json::to_string(&roster()).unwrap();
        let back: Vec<KernelSpec> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, roster());
        // hyperparameters may be omitted and fall back to the roster defaults
        let r: KernelSpec = serde_json::from_str(r#"{"kind":"rbf"}"#).unwrap();
        assert_eq!(r, KernelSpec::rbf(1.0));
        let p: KernelSpec = serde_json::from_str(r#"{"kind":"polynomial"}"#).unwrap();
        assert_eq!(p, KernelSpec::polynomial(1.0, 1.0, 2));
    }

    proptest! {
        #[test]
        fn base_eval_is_symmetric(
            xs in proptest::collection::vec(-5.0f64..5.0, 1..6),
            ys in proptest::collection::vec(-5.0f64..5.0, 1..6),
        ) {
            let d = xs.len().min(ys.len());
            let (x, y) = (&xs[..d], &ys[..d]);
            for spec in roster() {
                let a = base_eval(&spec, x, y).unwrap();
                let b = base_eval(&spec, y, x).unwrap();
                prop_assert_eq!(a, b);
            }
        }
    }
}
