//! Synthetic two-class Gaussian datasets, stand-ins for crawled account data.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, FeatureSchema};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::rng::{self, standard_normal, tag};
use crate::scalar::Scalar;

/// Two Gaussian clusters in raw feature space, labeled 0 (human) / 1 (bot).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub n_per_class: usize,
    /// Distance between class mean vectors, in units of within-class std.
    pub class_separation: f64,
    pub seed: u64,
    pub schema: FeatureSchema,
}

impl SyntheticConfig {
    fn validate(&self) -> Result<()> {
        if self.n_per_class < 2 {
            return Err(Error::config("n_per_class must be at least 2"));
        }
        if self.class_separation < 0.0 {
            return Err(Error::config("class_separation must be nonnegative"));
        }
        Ok(())
    }
}

/// Marginal shift and covariance remix applied to the partner dataset of a
/// cross-dataset generalization pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoboShift {
    /// Per-column mean shift in units of that column's std (random sign).
    pub shift: f64,
    /// Mixing weight pulling in one random partner column per column.
    pub mix: f64,
    pub seed: u64,
}

impl Default for LoboShift {
    fn default() -> Self {
        LoboShift {
            shift: 0.5,
            mix: 0.3,
            seed: 0,
        }
    }
}

pub fn generate_synthetic<S: Scalar>(cfg: &SyntheticConfig) -> Result<Dataset<S>> {
    generate_variant(cfg, 0)
}

/// Generates a dataset sharing `cfg`'s class structure (same class-mean
/// directions) but with an independent noise draw. Variant 0 is
/// `generate_synthetic` itself.
pub(crate) fn generate_variant<S: Scalar>(
    cfg: &SyntheticConfig,
    noise_index: u64,
) -> Result<Dataset<S>> {
    cfg.validate()?;
    let width = cfg.schema.total_width();

    // Class direction depends only on the seed, so variants stay comparable.
    let mut dir_rng = rng::stream(cfg.seed, tag::SYNTH, 0);
    let mut direction: Vec<f64> = (0..width).map(|_| standard_normal(&mut dir_rng)).collect();
    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
    for v in &mut direction {
        *v /= norm;
    }

    let half = cfg.class_separation / 2.0;
    let n = cfg.n_per_class * 2;
    let mut noise_rng = rng::stream(cfg.seed, tag::SYNTH, 1 + noise_index);
    let mut rows = Matrix::zeros(n, width);
    let mut labels = Vec::with_capacity(n);
    let mut ids = Vec::with_capacity(n);
    for r in 0..n {
        let label = (r >= cfg.n_per_class) as u8;
        let sign = if label == 1 { 1.0 } else { -1.0 };
        let row = rows.row_mut(r);
        for (c, slot) in row.iter_mut().enumerate() {
            let v = sign * half * direction[c] + standard_normal(&mut noise_rng);
            *slot = S::cast(v);
        }
        labels.push(label);
        ids.push(format!("synth_{r:06}"));
    }
    Dataset::new(cfg.schema.clone(), rows, Some(labels), ids)
}

/// Applies the seeded marginal shift and covariance remix of `shift` to a
/// dataset, producing the "different botnet" partner for generalization
/// experiments. Class labels are untouched; every column `j` becomes
/// `sqrt(1-mix^2) * x_j + mix * x_p(j) + shift * std_j * sign_j` for a random
/// partner column `p(j)` and random sign.
pub fn shift_and_remix<S: Scalar>(ds: &Dataset<S>, shift: &LoboShift) -> Dataset<S> {
    let width = ds.width();
    let n = ds.n_rows();
    let mut rng = rng::stream(shift.seed, tag::LOBO, 0);
    let partners: Vec<usize> = (0..width)
        .map(|j| {
            let mut p = rng.random_range(0..width - 1);
            if p >= j {
                p += 1;
            }
            p
        })
        .collect();
    let signs: Vec<f64> = (0..width)
        .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
        .collect();

    // Column stds of the source data give the shift its scale.
    let inv_n = 1.0 / n as f64;
    let mut stds = vec![0.0f64; width];
    for j in 0..width {
        let mut mean = 0.0;
        for r in 0..n {
            mean += ds.row(r)[j].to_f64_lossy();
        }
        mean *= inv_n;
        let mut var = 0.0;
        for r in 0..n {
            let d = ds.row(r)[j].to_f64_lossy() - mean;
            var += d * d;
        }
        stds[j] = (var * inv_n).sqrt().max(1e-12);
    }

    let keep = (1.0 - shift.mix * shift.mix).max(0.0).sqrt();
    let mut rows = Matrix::zeros(n, width);
    for r in 0..n {
        let src = ds.row(r);
        let dst = rows.row_mut(r);
        for j in 0..width {
            let mixed = keep * src[j].to_f64_lossy() + shift.mix * src[partners[j]].to_f64_lossy();
            dst[j] = S::cast(mixed + shift.shift * stds[j] * signs[j]);
        }
    }
    ds.with_rows(rows)
}

/// Seeded recipe for a cross-dataset pair: `A` and `B` share class structure;
/// `B` gets an independent noise draw plus `shift_and_remix`.
pub fn generate_lobo_pair<S: Scalar>(
    cfg: &SyntheticConfig,
    shift: &LoboShift,
) -> Result<(Dataset<S>, Dataset<S>)> {
    let a = generate_variant(cfg, 0)?;
    let b_raw = generate_variant(cfg, 1)?;
    let b = shift_and_remix(&b_raw, shift);
    Ok((a, b))
}
