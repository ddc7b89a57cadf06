//! Versioned JSON checkpoints holding the full trained pipeline state.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::augmentation::AugmentationConfig;
use crate::dataset::{FeatureSchema, NormStats};
use crate::error::{Error, Result};
use crate::model::{ModelConfig, ModelParams, TrainConfig};
use crate::scalar::Scalar;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint<S> {
    pub version: u32,
    pub schema: FeatureSchema,
    pub schema_fingerprint: u64,
    pub model: ModelConfig,
    pub params: ModelParams<S>,
    pub norm_stats: NormStats<S>,
    pub train_config: TrainConfig,
    pub augmentation: AugmentationConfig,
    pub seed: u64,
}

impl<S: Scalar> Checkpoint<S> {
    pub fn new(
        schema: FeatureSchema,
        model: ModelConfig,
        params: ModelParams<S>,
        norm_stats: NormStats<S>,
        train_config: TrainConfig,
        augmentation: AugmentationConfig,
        seed: u64,
    ) -> Self {
        let schema_fingerprint = schema.fingerprint();
        Checkpoint {
            version: CHECKPOINT_VERSION,
            schema,
            schema_fingerprint,
            model,
            params,
            norm_stats,
            train_config,
            augmentation,
            seed,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                fs::create_dir_all(dir)?;
            }
        }
        fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::data(format!("cannot read checkpoint {}: {e}", path.display())))?;
        let ckpt: Checkpoint<S> = serde_json::from_str(&text)?;
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(Error::config(format!(
                "checkpoint version {} is not supported (expected {CHECKPOINT_VERSION})",
                ckpt.version
            )));
        }
        if ckpt.schema.fingerprint() != ckpt.schema_fingerprint {
            return Err(Error::data(
                "checkpoint schema fingerprint does not match its schema",
            ));
        }
        Ok(ckpt)
    }

    /// Compatibility gate for applying this checkpoint to a dataset.
    pub fn check_schema(&self, schema: &FeatureSchema) -> Result<()> {
        if schema.fingerprint() != self.schema_fingerprint {
            return Err(Error::config(
                "checkpoint was trained on a different schema",
            ));
        }
        Ok(())
    }
}
