//! Closed-form capacity calculators: the pseudo-dimension bound from the
//! free-weight count, the Rademacher chaos upper bound, and the width of
//! the feed-forward network with a matching parameter budget.

use crate::error::{Error, Result};

/// Query parameters: architecture shape plus the kernel sup value
/// `u = sup √K(x,x)`.
#[derive(Debug, Clone, Copy)]
pub struct BoundQuery {
    pub layers: usize,
    pub sets: usize,
    pub kernels: usize,
    pub u: f64,
}

/// Pseudo-dimension bound: `m` for a single layer, otherwise the free
/// weight count `(l−2)h²m + 2hm`.
pub fn pseudo_dim_bound(layers: usize, sets: usize, kernels: usize) -> u64 {
    let (l, h, m) = (layers as u64, sets as u64, kernels as u64);
    if l == 1 {
        m
    } else {
        (l - 2) * h * h * m + 2 * h * m
    }
}

/// Rademacher chaos upper bound `(192e + 1)·u²·d_K`.
pub fn rademacher_bound(query: &BoundQuery) -> f64 {
    let pdim = pseudo_dim_bound(query.layers, query.sets, query.kernels) as f64;
    (192.0 * std::f64::consts::E + 1.0) * query.u * query.u * pdim
}

/// Width `d` of a feed-forward network whose `d²(l−1)` free parameters
/// match the architecture's: `d = √(((l−2)h²m + 2hm)/(l−1))`. Undefined
/// for a single layer.
pub fn equivalent_ffn_width(layers: usize, sets: usize, kernels: usize) -> Result<f64> {
    if layers < 2 {
        return Err(Error::InvalidConfig(
            "equivalent feed-forward width is undefined for a single layer".into(),
        ));
    }
    let pdim = pseudo_dim_bound(layers, sets, kernels) as f64;
    Ok((pdim / (layers as f64 - 1.0)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_layer_uses_kernel_count() {
        assert_eq!(pseudo_dim_bound(1, 1, 4), 4);
        assert_eq!(pseudo_dim_bound(1, 3, 4), 4);
    }

    #[test]
    fn multi_layer_uses_weight_count() {
        assert_eq!(pseudo_dim_bound(3, 1, 4), 12);
        assert_eq!(pseudo_dim_bound(2, 1, 1), 2);
        assert_eq!(pseudo_dim_bound(2, 5, 7), 2 * 5 * 7);
    }

    #[test]
    fn rademacher_zero_sup() {
        let q = BoundQuery {
            layers: 3,
            sets: 2,
            kernels: 4,
            u: 0.0,
        };
        assert_eq!(rademacher_bound(&q), 0.0);
    }

    #[test]
    fn rademacher_unit_case() {
        let q = BoundQuery {
            layers: 1,
            sets: 1,
            kernels: 1,
            u: 1.0,
        };
        let v = rademacher_bound(&q);
        assert!((v - (192.0 * std::f64::consts::E + 1.0)).abs() < 1e-12);
        assert!((v - 522.9101110641367).abs() < 1e-9);
    }

    #[test]
    fn deeper_bound_dominates_shallow() {
        for (h, m) in [(1usize, 1usize), (1, 4), (2, 3)] {
            let shallow = BoundQuery {
                layers: 1,
                sets: h,
                kernels: m,
                u: 1.3,
            };
            let deep = BoundQuery {
                layers: 3,
                sets: h,
                kernels: m,
                u: 1.3,
            };
            assert!(rademacher_bound(&deep) >= rademacher_bound(&shallow));
        }
    }

    #[test]
    fn ffn_width_examples() {
        assert!((equivalent_ffn_width(3, 1, 4).unwrap() - 6.0f64.sqrt()).abs() < 1e-12);
        assert!((equivalent_ffn_width(2, 1, 2).unwrap() - 2.0).abs() < 1e-12);
        assert!(equivalent_ffn_width(1, 1, 4).is_err());
    }

    #[test]
    fn width_squared_recovers_pseudo_dimension() {
        let mut l = 2usize;
        let mut h = 1usize;
        let mut m = 1usize;
        for step in 0..100usize {
            l = 2 + (l * 7 + step) % 6;
            h = 1 + (h * 5 + step) % 4;
            m = 1 + (m * 3 + step) % 5;
            let d = equivalent_ffn_width(l, h, m).unwrap();
            let back = d * d * (l as f64 - 1.0);
            assert!((back - pseudo_dim_bound(l, h, m) as f64).abs() < 1e-8);
        }
    }
}
