//! Feature schema, dataset container, normalization, splitting, synthetic
//! data generation, and file I/O.

mod io;
mod norm;
mod schema;
mod synth;

pub use io::{load_dataset, save_dataset, sidecar_path};
pub use norm::{apply_normalizer, fit_normalizer, NormStats};
pub use schema::{Category, FeatureSchema};
pub use synth::{generate_lobo_pair, generate_synthetic, shift_and_remix, LoboShift, SyntheticConfig};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::{self, tag};
use crate::scalar::Scalar;

/// Row-major feature matrix with optional binary labels and per-row ids.
/// Immutable after construction.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset<S> {
    schema: FeatureSchema,
    rows: Matrix<S>,
    labels: Option<Vec<u8>>,
    ids: Vec<String>,
}

impl<S: Scalar> Dataset<S> {
    pub fn new(
        schema: FeatureSchema,
        rows: Matrix<S>,
        labels: Option<Vec<u8>>,
        ids: Vec<String>,
    ) -> Result<Self> {
        if rows.cols() != schema.total_width() {
            return Err(Error::Dimension {
                context: "Dataset::new row width",
                expected: schema.total_width(),
                actual: rows.cols(),
            });
        }
        if ids.len() != rows.rows() {
            return Err(Error::Dimension {
                context: "Dataset::new id count",
                expected: rows.rows(),
                actual: ids.len(),
            });
        }
        if let Some(ref ls) = labels {
            if ls.len() != rows.rows() {
                return Err(Error::Dimension {
                    context: "Dataset::new label count",
                    expected: rows.rows(),
                    actual: ls.len(),
                });
            }
            if let Some(bad) = ls.iter().position(|&l| l > 1) {
                return Err(Error::data(format!(
                    "label for id '{}' is {}, expected 0 or 1",
                    ids[bad], ls[bad]
                )));
            }
        }
        for r in 0..rows.rows() {
            for (c, v) in rows.row(r).iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::data(format!(
                        "non-finite value at row {r} (id '{}'), column {c}",
                        ids[r]
                    )));
                }
            }
        }
        Ok(Dataset {
            schema,
            rows,
            labels,
            ids,
        })
    }

    pub fn schema(&self) -> &FeatureSchema {
        &self.schema
    }

    pub fn n_rows(&self) -> usize {
        self.rows.rows()
    }

    pub fn width(&self) -> usize {
        self.rows.cols()
    }

    pub fn row(&self, r: usize) -> &[S] {
        self.rows.row(r)
    }

    pub fn rows(&self) -> &Matrix<S> {
        &self.rows
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    /// New dataset holding the given row indices, in the order given.
    pub fn select(&self, indices: &[usize]) -> Dataset<S> {
        let mut rows = Matrix::zeros(indices.len(), self.width());
        for (out_r, &r) in indices.iter().enumerate() {
            rows.row_mut(out_r).copy_from_slice(self.rows.row(r));
        }
        Dataset {
            schema: self.schema.clone(),
            rows,
            labels: self
                .labels
                .as_ref()
                .map(|ls| indices.iter().map(|&r| ls[r]).collect()),
            ids: indices.iter().map(|&r| self.ids[r].clone()).collect(),
        }
    }

    /// Replaces the feature matrix, keeping schema, labels, and ids.
    pub(crate) fn with_rows(&self, rows: Matrix<S>) -> Dataset<S> {
        debug_assert_eq!(rows.rows(), self.n_rows());
        debug_assert_eq!(rows.cols(), self.width());
        Dataset {
            schema: self.schema.clone(),
            rows,
            labels: self.labels.clone(),
            ids: self.ids.clone(),
        }
    }
}

/// Stratified train/test split, deterministic in `seed`.
pub fn split_dataset<S: Scalar>(
    ds: &Dataset<S>,
    test_fraction: f64,
    seed: u64,
) -> Result<(Dataset<S>, Dataset<S>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::config(format!(
            "test_fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    let labels = ds
        .labels()
        .ok_or_else(|| Error::config("split_dataset requires labels"))?;

    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for class in [0u8, 1u8] {
        let members: Vec<usize> = (0..ds.n_rows()).filter(|&r| labels[r] == class).collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < 2 {
            return Err(Error::config(format!(
                "class {class} has {} member(s); need at least 2 to split",
                members.len()
            )));
        }
        let n_test = round_half_up(test_fraction * members.len() as f64)
            .clamp(1, members.len() - 1);
        let mut order: Vec<usize> = (0..members.len()).collect();
        let mut rng = rng::stream(seed, tag::SPLIT, class as u64);
        rng::shuffle(&mut rng, &mut order);
        for (pos, &slot) in order.iter().enumerate() {
            if pos < n_test {
                test_idx.push(members[slot]);
            } else {
                train_idx.push(members[slot]);
            }
        }
    }
    // Keep original row order inside each side.
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok((ds.select(&train_idx), ds.select(&test_idx)))
}

/// Round-half-up to the nearest integer; the crate-wide rounding rule for
/// turning rates into counts.
pub(crate) fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor().max(0.0) as usize
}
