//! Benchmark comparison statistics: tie-averaged mean ranks across
//! datasets and the paired Wilcoxon signed-rank test (exact null by
//! enumeration for small samples, normal approximation with tie and
//! continuity corrections otherwise).

use ndarray::Array2;

use crate::error::{Error, Result};

/// Largest effective sample for which the exact null distribution is
/// enumerated.
pub const EXACT_LIMIT: usize = 20;

/// Per-method mean rank over datasets. Rows are datasets, columns are
/// methods; rank 1 is best (highest accuracy) and ties receive the
/// average of the ranks they cover.
pub fn mean_ranks(acc: &Array2<f64>) -> Result<Vec<f64>> {
    let (n_data, n_methods) = acc.dim();
    if n_data == 0 || n_methods == 0 {
        return Err(Error::InvalidConfig(
            "accuracy matrix must be non-empty".into(),
        ));
    }
    if acc.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig(
            "accuracy matrix has missing cells".into(),
        ));
    }
    let mut sums = vec![0.0; n_methods];
    for row in acc.rows() {
        let mut order: Vec<usize> = (0..n_methods).collect();
        order.sort_by(|&a, &b| row[b].partial_cmp(&row[a]).unwrap());
        let mut pos = 0;
        while pos < n_methods {
            let mut end = pos + 1;
            while end < n_methods && row[order[end]] == row[order[pos]] {
                end += 1;
            }
            // positions pos..end (0-based) share the average of ranks pos+1..end+1
            let avg = (pos + 1 + end) as f64 / 2.0;
            for &m in &order[pos..end] {
                sums[m] += avg;
            }
            pos = end;
        }
    }
    Ok(sums.into_iter().map(|s| s / n_data as f64).collect())
}

/// Per-method mean rank with dense ranking: tied methods share one rank
/// and the next distinct value takes the next integer. This is the
/// convention behind the published benchmark rank row; [`mean_ranks`]
/// (tie-averaged) conserves rank sums instead.
pub fn mean_ranks_dense(acc: &Array2<f64>) -> Result<Vec<f64>> {
    let (n_data, n_methods) = acc.dim();
    if n_data == 0 || n_methods == 0 {
        return Err(Error::InvalidConfig(
            "accuracy matrix must be non-empty".into(),
        ));
    }
    if acc.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig(
            "accuracy matrix has missing cells".into(),
        ));
    }
    let mut sums = vec![0.0; n_methods];
    for row in acc.rows() {
        let mut distinct: Vec<f64> = row.iter().copied().collect();
        distinct.sort_by(|a, b| b.partial_cmp(a).unwrap());
        distinct.dedup();
        for m in 0..n_methods {
            let rank = distinct.iter().position(|&v| v == row[m]).unwrap() + 1;
            sums[m] += rank as f64;
        }
    }
    Ok(sums.into_iter().map(|s| s / n_data as f64).collect())
}

/// Two-sided paired Wilcoxon signed-rank p-value. Zero differences are
/// dropped; if all differences are zero the p-value is 1.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::TooFewRows {
            needed: 2,
            got: a.len(),
        });
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    if diffs.is_empty() {
        return Ok(1.0);
    }
    let (ranks, signs) = signed_ranks(&diffs);
    let w_plus: f64 = ranks
        .iter()
        .zip(&signs)
        .filter(|(_, s)| **s > 0.0)
        .map(|(r, _)| r)
        .sum();
    if diffs.len() <= EXACT_LIMIT {
        Ok(exact_two_sided(&ranks, w_plus))
    } else {
        Ok(normal_two_sided(&ranks, w_plus))
    }
}

/// Tie-averaged ranks of |d| together with the signs of d.
fn signed_ranks(diffs: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = diffs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diffs[i].abs().partial_cmp(&diffs[j].abs()).unwrap());
    let mut ranks = vec![0.0; n];
    let mut pos = 0;
    while pos < n {
        let mut end = pos + 1;
        while end < n && diffs[order[end]].abs() == diffs[order[pos]].abs() {
            end += 1;
        }
        let avg = (pos + 1 + end) as f64 / 2.0;
        for &i in &order[pos..end] {
            ranks[i] = avg;
        }
        pos = end;
    }
    let signs = diffs.iter().map(|d| d.signum()).collect();
    (ranks, signs)
}

/// Exact two-sided p-value by enumerating the null distribution of W⁺
/// over all sign assignments. Counts are accumulated over doubled ranks
/// so tie-averaged half-integer ranks stay integral.
pub fn exact_two_sided(ranks: &[f64], w_plus: f64) -> f64 {
    let doubled: Vec<u64> = ranks.iter().map(|r| (2.0 * r).round() as u64).collect();
    let total: u64 = doubled.iter().sum();
    let w2 = (2.0 * w_plus).round() as u64;
    let w_min = w2.min(total - w2);

    // polynomial DP: counts[s] = #sign assignments with doubled W⁺ = s
    let mut counts = vec![0.0f64; total as usize + 1];
    counts[0] = 1.0;
    let mut reach = 0usize;
    for &d in &doubled {
        let d = d as usize;
        reach += d;
        for s in (d..=reach).rev() {
            counts[s] += counts[s - d];
        }
    }
    let assignments = 2f64.powi(ranks.len() as i32);
    let tail: f64 = counts[..=w_min as usize].iter().sum();
    (2.0 * tail / assignments).min(1.0)
}

/// Normal approximation with tie correction and continuity correction.
pub fn normal_two_sided(ranks: &[f64], w_plus: f64) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0;
    // tie groups reduce the variance by Σ(t³−t)/48
    let mut sorted: Vec<f64> = ranks.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        var -= (t * t * t - t) / 48.0;
        i = j;
    }
    if var <= 0.0 {
        return 1.0;
    }
    let centered = w_plus - mean;
    let z = if centered.abs() <= 0.5 {
        0.0
    } else {
        (centered.abs() - 0.5) / var.sqrt()
    };
    libm::erfc(z / std::f64::consts::SQRT_2).min(1.0)
}
