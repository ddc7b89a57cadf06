//! The frozen inference bundle: training-set normalizer, trained model, and
//! fitted probe. Every consumer (evaluation, export, the evasion harness)
//! goes through this one prediction path.

use serde::{Deserialize, Serialize};

use crate::augmentation::AugmentationConfig;
use crate::dataset::{Dataset, NormStats};
use crate::error::{Error, Result};
use crate::evaluation::{predict, ProbeConfig, ProbeParams};
use crate::model::{encode, ModelConfig, ModelParams, TrainConfig};
use crate::scalar::Scalar;

/// Everything the end-to-end pipeline needs, bundled for serialization into
/// run configs and reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub augmentation: AugmentationConfig,
    pub probe: ProbeConfig,
    pub test_fraction: f64,
    pub split_seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            augmentation: AugmentationConfig::default(),
            probe: ProbeConfig::default(),
            test_fraction: 0.2,
            split_seed: 0,
        }
    }
}

impl PipelineConfig {
    /// Propagates the single run seed into every seeded sub-config.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.train.seed = seed;
        self.augmentation.seed = seed;
        self.split_seed = seed;
        self
    }
}

/// Frozen normalizer + model + probe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pipeline<S> {
    pub stats: NormStats<S>,
    pub params: ModelParams<S>,
    pub probe: ProbeParams<S>,
}

impl<S: Scalar> Pipeline<S> {
    /// Full prediction path from a raw (un-normalized) feature row:
    /// normalize with the training statistics, encode, and apply the probe.
    pub fn predict_raw(&self, raw_row: &[S]) -> Result<(u8, S)> {
        let h = self.embed_raw(raw_row)?;
        Ok(predict(&self.probe, &h))
    }

    /// Encoder output for a raw row, after normalization.
    pub fn embed_raw(&self, raw_row: &[S]) -> Result<Vec<S>> {
        if raw_row.len() != self.params.raw_width() {
            return Err(Error::Dimension {
                context: "pipeline input width",
                expected: self.params.raw_width(),
                actual: raw_row.len(),
            });
        }
        let mut row = raw_row.to_vec();
        self.stats.apply_to_row(&mut row);
        let (h, _) = encode(&self.params, &row)?;
        Ok(h)
    }

    /// Predictions for every row of a raw dataset.
    pub fn predict_dataset(&self, ds: &Dataset<S>) -> Result<Vec<u8>> {
        (0..ds.n_rows())
            .map(|r| self.predict_raw(ds.row(r)).map(|(label, _)| label))
            .collect()
    }
}
