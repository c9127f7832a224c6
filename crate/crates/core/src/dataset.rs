//! Dataset ingestion and the benchmark split protocol: drop rows with
//! missing values, seeded half/half split, standardization from training
//! statistics only.

use std::collections::BTreeSet;
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Rows as parsed from disk, labels already mapped to ±1.
#[derive(Debug, Clone)]
pub struct RawDataset {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<f64>,
    pub feature_names: Vec<String>,
    /// Rows removed by the missing-value filter during loading.
    pub dropped_rows: usize,
}

impl RawDataset {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    fn class_count(&self) -> usize {
        let has_pos = self.labels.iter().any(|&y| y > 0.0);
        let has_neg = self.labels.iter().any(|&y| y < 0.0);
        has_pos as usize + has_neg as usize
    }

    /// Write back out in the same CSV layout `load_csv` reads, with the
    /// label in the last column as `-1`/`+1`.
    pub fn write_csv<P: AsRef<Path>>(&self, path: P, label_column: &str) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push(label_column);
        w.write_record(&header)?;
        for (row, &y) in self.features.iter().zip(&self.labels) {
            let mut rec: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            rec.push(if y > 0.0 { "1".into() } else { "-1".into() });
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A standardized feature matrix with ±1 labels.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: Array2<f64>,
    pub y: Array1<f64>,
    /// Per-column (mean, stddev) used for the affine transform.
    pub standardization: Vec<(f64, f64)>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }
}

/// Seeded split parameters. The same seed always yields the same split.
#[derive(Debug, Clone, Copy)]
pub struct SplitSpec {
    pub seed: u64,
    pub train_fraction: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            seed: 0,
            train_fraction: 0.5,
        }
    }
}

impl SplitSpec {
    pub fn new(seed: u64) -> Self {
        SplitSpec {
            seed,
            ..Default::default()
        }
    }
}

/// Load a CSV file with a header row, dropping every row that has an
/// empty or non-numeric feature cell. The two label values map to ±1 by
/// lexicographic order of their text (smaller → −1).
pub fn load_csv<P: AsRef<Path>>(path: P, label_column: &str) -> Result<RawDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)?;
    let headers = reader.headers()?.clone();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::MissingLabelColumn(label_column.to_string()))?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_idx)
        .map(|(_, h)| h.to_string())
        .collect();

    let mut rows: Vec<(Vec<f64>, String)> = Vec::new();
    let mut label_values: BTreeSet<String> = BTreeSet::new();
    let mut dropped = 0usize;
    for record in reader.records() {
        let record = record?;
        let label = record.get(label_idx).unwrap_or("").trim().to_string();
        if label.is_empty() {
            dropped += 1;
            continue;
        }
        let mut feats = Vec::with_capacity(feature_names.len());
        let mut ok = true;
        for (i, cell) in record.iter().enumerate() {
            if i == label_idx {
                continue;
            }
            match cell.trim().parse::<f64>() {
                Ok(v) if v.is_finite() => feats.push(v),
                _ => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok || feats.len() != feature_names.len() {
            dropped += 1;
            continue;
        }
        label_values.insert(label.clone());
        rows.push((feats, label));
    }

    if rows.is_empty() {
        return Err(Error::NoRowsSurvived);
    }
    if label_values.len() != 2 {
        return Err(Error::LabelCardinality {
            found: label_values.len(),
        });
    }
    // BTreeSet iterates in lexicographic order: first value → −1
    let neg_label = label_values.iter().next().unwrap().clone();

    let mut features = Vec::with_capacity(rows.len());
    let mut labels = Vec::with_capacity(rows.len());
    for (feats, label) in rows {
        features.push(feats);
        labels.push(if label == neg_label { -1.0 } else { 1.0 });
    }
    Ok(RawDataset {
        features,
        labels,
        feature_names,
        dropped_rows: dropped,
    })
}

/// Split rows into train/test by a seeded uniform permutation. The first
/// `⌊n·train_fraction⌋` permuted rows form the training set.
pub fn split(raw: &RawDataset, spec: &SplitSpec) -> Result<(RawDataset, RawDataset)> {
    let n = raw.len();
    if n < 4 {
        return Err(Error::TooFewRows { needed: 4, got: n });
    }
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "train_fraction must lie in (0,1), got {}",
            spec.train_fraction
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    // Fisher–Yates over the raw ChaCha stream so the permutation depends
    // only on the seed, not on rand's distribution internals.
    for i in (1..n).rev() {
        let j = bounded_index(&mut rng, i as u64 + 1) as usize;
        order.swap(i, j);
    }
    let n_train = (n as f64 * spec.train_fraction).floor() as usize;

    let take = |idx: &[usize]| RawDataset {
        features: idx.iter().map(|&i| raw.features[i].clone()).collect(),
        labels: idx.iter().map(|&i| raw.labels[i]).collect(),
        feature_names: raw.feature_names.clone(),
        dropped_rows: 0,
    };
    let train = take(&order[..n_train]);
    let test = take(&order[n_train..]);
    if train.class_count() < 2 {
        return Err(Error::SingleClassSplit { seed: spec.seed });
    }
    Ok((train, test))
}

/// Unbiased draw from `0..bound` via rejection sampling on `next_u64`.
fn bounded_index(rng: &mut ChaCha8Rng, bound: u64) -> u64 {
    let zone = u64::MAX - (u64::MAX - bound + 1) % bound;
    loop {
        let v = rng.next_u64();
        if v <= zone {
            return v % bound;
        }
    }
}

/// Standardize both sets with per-column mean and sample stddev computed
/// on the training rows only. Near-constant columns are centered but not
/// scaled.
pub fn standardize(train: &RawDataset, test: &RawDataset) -> Result<(Dataset, Dataset)> {
    if train.is_empty() {
        return Err(Error::TooFewRows { needed: 1, got: 0 });
    }
    let d = train.dim();
    if !test.is_empty() && test.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: test.dim(),
        });
    }
    let n = train.len() as f64;
    let mut params = Vec::with_capacity(d);
    for c in 0..d {
        let mean: f64 = train.features.iter().map(|r| r[c]).sum::<f64>() / n;
        let std = if train.len() > 1 {
            let ss: f64 = train.features.iter().map(|r| (r[c] - mean).powi(2)).sum();
            (ss / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        params.push((mean, std));
    }

    let transform = |raw: &RawDataset| -> Dataset {
        let rows = raw.len();
        let mut x = Array2::zeros((rows, d));
        for (i, row) in raw.features.iter().enumerate() {
            for (c, &(mean, std)) in params.iter().enumerate() {
                let v = row[c] - mean;
                x[[i, c]] = if std < 1e-12 { v } else { v / std };
            }
        }
        Dataset {
            x,
            y: Array1::from_vec(raw.labels.clone()),
            standardization: params.clone(),
        }
    };
    Ok((transform(train), transform(test)))
}
