//! Per-column z-score normalization fit on training data.
//!
//! The embedding block passes through untouched; only the three metadata and
//! temporal categories are standardized.

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Population means and standard deviations for the normalized columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormStats<S> {
    pub means: Vec<S>,
    pub stds: Vec<S>,
    pub normalized_columns: Vec<usize>,
    pub schema_fingerprint: u64,
}

/// Computes per-column population statistics over the training rows.
/// Columns with standard deviation below `1e-12` are guarded to `std = 1`.
pub fn fit_normalizer<S: Scalar>(train: &Dataset<S>) -> Result<NormStats<S>> {
    let n = train.n_rows();
    if n < 2 {
        return Err(Error::config(format!(
            "normalizer needs at least 2 rows, got {n}"
        )));
    }
    let cols = train.schema().normalized_columns();
    let inv_n = S::one() / S::from_usize(n).unwrap();
    let mut means = Vec::with_capacity(cols.len());
    let mut stds = Vec::with_capacity(cols.len());
    for &c in &cols {
        let mut sum = S::zero();
        for r in 0..n {
            sum += train.row(r)[c];
        }
        let mean = sum * inv_n;
        let mut sq = S::zero();
        for r in 0..n {
            let d = train.row(r)[c] - mean;
            sq += d * d;
        }
        let mut std = (sq * inv_n).sqrt();
        if std < S::cast(1e-12) {
            std = S::one();
        }
        means.push(mean);
        stds.push(std);
    }
    Ok(NormStats {
        means,
        stds,
        normalized_columns: cols,
        schema_fingerprint: train.schema().fingerprint(),
    })
}

/// Applies fitted statistics to every row of `ds`.
pub fn apply_normalizer<S: Scalar>(stats: &NormStats<S>, ds: &Dataset<S>) -> Result<Dataset<S>> {
    if stats.schema_fingerprint != ds.schema().fingerprint() {
        return Err(Error::config(
            "normalizer was fit on a different schema than the dataset",
        ));
    }
    let mut rows = ds.rows().clone();
    for r in 0..rows.rows() {
        stats.apply_to_row(rows.row_mut(r));
    }
    Ok(ds.with_rows(rows))
}

impl<S: Scalar> NormStats<S> {
    /// Normalizes a single raw row in place; the inference path for
    /// perturbed candidates and embedding export.
    pub fn apply_to_row(&self, row: &mut [S]) {
        for (i, &c) in self.normalized_columns.iter().enumerate() {
            row[c] = (row[c] - self.means[i]) / self.stds[i];
        }
    }
}
