//! Declarative run configuration: a TOML file plus dotted-path overrides.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tabcl::adversarial::{default_grids, AttackGroup, AttackSpec, FeatureGrid};
use tabcl::augmentation::AugmentationConfig;
use tabcl::dataset::{FeatureSchema, LoboShift, SyntheticConfig};
use tabcl::evaluation::ProbeConfig;
use tabcl::model::{LossKind, ModelConfig, TrainConfig};
use tabcl::pipeline::PipelineConfig;

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    pub out_dir: PathBuf,
    pub data_a: PathBuf,
    pub data_b: PathBuf,
    pub checkpoint: PathBuf,
    pub probe: PathBuf,
    pub embeddings: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            out_dir: "out".into(),
            data_a: "out/data_a.csv".into(),
            data_b: "out/data_b.csv".into(),
            checkpoint: "out/checkpoint.json".into(),
            probe: "out/probe.json".into(),
            embeddings: "out/embeddings.csv".into(),
        }
    }
}

/// Synthetic data generation settings. Width fields default to the standard
/// account schema; overriding only `embedding_dim` keeps the real feature
/// names, anything else switches to generated names.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DataConfig {
    pub n_per_class: usize,
    pub class_separation: f64,
    pub user_meta: usize,
    pub embedding_dim: usize,
    pub tweet_meta: usize,
    pub temporal: usize,
    /// Also generate the shifted partner dataset at `paths.data_b`.
    pub lobo_pair: bool,
    pub lobo_shift: f64,
    pub lobo_mix: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            n_per_class: 1000,
            class_separation: 4.0,
            user_meta: 33,
            embedding_dim: 768,
            tweet_meta: 29,
            temporal: 7,
            lobo_pair: false,
            lobo_shift: 0.5,
            lobo_mix: 0.3,
        }
    }
}

impl DataConfig {
    pub fn schema(&self) -> Result<FeatureSchema, CliError> {
        let default = DataConfig::default();
        let standard_widths = (self.user_meta, self.tweet_meta, self.temporal)
            == (default.user_meta, default.tweet_meta, default.temporal);
        let schema = if standard_widths {
            FeatureSchema::with_embedding_dim(self.embedding_dim)
        } else {
            FeatureSchema::synthetic(
                self.user_meta,
                self.embedding_dim,
                self.tweet_meta,
                self.temporal,
            )?
        };
        Ok(schema)
    }

    pub fn synthetic_config(&self, seed: u64) -> Result<SyntheticConfig, CliError> {
        Ok(SyntheticConfig {
            n_per_class: self.n_per_class,
            class_separation: self.class_separation,
            seed,
            schema: self.schema()?,
        })
    }

    pub fn lobo_shift(&self, seed: u64) -> LoboShift {
        LoboShift {
            shift: self.lobo_shift,
            mix: self.lobo_mix,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    pub test_fraction: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig { test_fraction: 0.2 }
    }
}

/// Grid spec in config form; expands to a [`FeatureGrid`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub feature: String,
    #[serde(default)]
    pub values: Vec<f64>,
    #[serde(default)]
    pub start: Option<f64>,
    #[serde(default)]
    pub end: Option<f64>,
    #[serde(default)]
    pub step: Option<f64>,
}

impl GridConfig {
    fn to_grid(&self) -> Result<FeatureGrid, CliError> {
        if !self.values.is_empty() {
            return Ok(FeatureGrid::new(self.feature.clone(), self.values.clone()));
        }
        match (self.start, self.end, self.step) {
            (Some(s), Some(e), Some(st)) => Ok(FeatureGrid::range(self.feature.clone(), s, e, st)),
            _ => Err(CliError::config(format!(
                "grid for '{}' needs either values or start/end/step",
                self.feature
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttackConfig {
    pub group: AttackGroup,
    pub max_queries_per_sample: u64,
    /// Campaign input: this many predicted-bot and predicted-human rows each.
    pub n_each: usize,
    /// Empty means the built-in default grids over the seven manipulable
    /// features.
    pub grids: Vec<GridConfig>,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            group: AttackGroup::All,
            max_queries_per_sample: 1_000_000,
            n_each: 100,
            grids: Vec::new(),
        }
    }
}

impl AttackConfig {
    pub fn spec(&self, seed: u64) -> Result<AttackSpec, CliError> {
        let grids = if self.grids.is_empty() {
            default_grids()
        } else {
            self.grids
                .iter()
                .map(|g| g.to_grid())
                .collect::<Result<Vec<_>, _>>()?
        };
        Ok(AttackSpec {
            group: self.group,
            grids,
            max_queries_per_sample: self.max_queries_per_sample,
            seed,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub corruption_rates: Vec<f64>,
    pub batch_sizes: Vec<usize>,
    pub epochs: Vec<usize>,
    pub losses: Vec<LossKind>,
    pub parallel: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            corruption_rates: vec![0.4, 0.5, 0.6, 0.7, 0.8],
            batch_sizes: vec![128, 256, 512],
            epochs: vec![1000, 5000, 10000],
            losses: vec![
                LossKind::SelfSupervised,
                LossKind::Supervised,
                LossKind::SupervisedMod,
            ],
            parallel: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GradcheckConfig {
    pub pairs: usize,
    pub user_meta: usize,
    pub embedding_dim: usize,
    pub tweet_meta: usize,
    pub temporal: usize,
    pub d: usize,
    pub out_dim: usize,
    pub eps: f64,
    pub tolerance: f64,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        GradcheckConfig {
            pairs: 8,
            user_meta: 6,
            embedding_dim: 8,
            tweet_meta: 4,
            temporal: 2,
            d: 4,
            out_dim: 8,
            eps: 1e-5,
            tolerance: 1e-5,
        }
    }
}

/// The whole run configuration. Every command reads the one file; the
/// effective (post-override) form is embedded verbatim in every report.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub paths: Paths,
    pub data: DataConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub augmentation: AugmentationConfig,
    pub probe: ProbeConfig,
    pub split: SplitConfig,
    pub attack: AttackConfig,
    pub sweep: SweepConfig,
    pub gradcheck: GradcheckConfig,
}

impl RunConfig {
    /// Pipeline config with the global seed propagated into every
    /// seeded sub-config.
    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            model: self.model,
            train: self.train.clone(),
            augmentation: self.augmentation.clone(),
            probe: self.probe.clone(),
            test_fraction: self.split.test_fraction,
            split_seed: 0,
        }
        .with_seed(self.seed)
    }

}

/// Loads the config file (missing path with default name is fine), applies
/// `--set` overrides, and deserializes.
pub fn load_config(
    path: Option<&Path>,
    overrides: &[String],
    seed: Option<u64>,
    out_dir: Option<&Path>,
) -> Result<RunConfig, CliError> {
    let mut value: toml::Value = match path {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| CliError::config(format!("cannot read config {}: {e}", p.display())))?;
            let table: toml::Table = text
                .parse()
                .map_err(|e| CliError::config(format!("invalid TOML in {}: {e}", p.display())))?;
            toml::Value::Table(table)
        }
        None => toml::Value::Table(Default::default()),
    };
    for assignment in overrides {
        apply_override(&mut value, assignment)?;
    }
    let mut config: RunConfig = value
        .try_into()
        .map_err(|e| CliError::config(format!("invalid config: {e}")))?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    if let Some(dir) = out_dir {
        retarget_out_dir(&mut config.paths, dir);
    }
    Ok(config)
}

/// Moves every default-rooted output path under the new directory; paths the
/// user set explicitly elsewhere are kept.
fn retarget_out_dir(paths: &mut Paths, dir: &Path) {
    let defaults = Paths::default();
    let move_path = |p: &mut PathBuf, default: &Path| {
        if *p == default {
            *p = dir.join(p.file_name().expect("default paths have file names"));
        }
    };
    move_path(&mut paths.data_a, &defaults.data_a);
    move_path(&mut paths.data_b, &defaults.data_b);
    move_path(&mut paths.checkpoint, &defaults.checkpoint);
    move_path(&mut paths.probe, &defaults.probe);
    move_path(&mut paths.embeddings, &defaults.embeddings);
    if paths.out_dir == defaults.out_dir {
        paths.out_dir = dir.to_path_buf();
    }
}

/// Applies one `key.path=value` override. The value is parsed as TOML, so
/// numbers, booleans, arrays, and quoted strings all work; bare words fall
/// back to strings.
fn apply_override(root: &mut toml::Value, assignment: &str) -> Result<(), CliError> {
    let (key, raw_value) = assignment.split_once('=').ok_or_else(|| {
        CliError::config(format!("override '{assignment}' must look like key.path=value"))
    })?;
    let key = key.trim();
    let raw_value = raw_value.trim();
    if key.is_empty() {
        return Err(CliError::config("override has an empty key"));
    }
    // `toml::Value` parses a bare value expression, so numbers, booleans,
    // arrays, and quoted strings all work; bare words become strings.
    let parsed: toml::Value = raw_value
        .parse()
        .unwrap_or_else(|_| toml::Value::String(raw_value.to_string()));

    let mut node = root;
    let segments: Vec<&str> = key.split('.').collect();
    for (i, seg) in segments.iter().enumerate() {
        let table = node.as_table_mut().ok_or_else(|| {
            CliError::config(format!("override '{key}': '{seg}' is not a table"))
        })?;
        if i == segments.len() - 1 {
            table.insert(seg.to_string(), parsed);
            return Ok(());
        }
        node = table
            .entry(seg.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    unreachable!("loop returns on the last segment")
}
