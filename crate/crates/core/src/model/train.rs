//! The contrastive training loop: shuffle, batch, augment, forward/backward,
//! optimizer step. Deterministic given the seed.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::adam::{adam_step, sgd_step, AdamState};
use super::grad::backward;
use super::{ModelConfig, ModelParams, OptimizerKind, TrainConfig};
use crate::augmentation::{make_views, Augmenter, AugmentationConfig};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::{self, tag};
use crate::scalar::Scalar;

/// Batches smaller than this are dropped from the tail of an epoch;
/// contrastive losses need enough in-batch negatives.
const MIN_BATCH: usize = 4;

/// Per-epoch loss trace. Wall-clock values are informational; use
/// [`TrainHistory::normalized`] for byte-comparable reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epoch_losses: Vec<f64>,
    pub epoch_seconds: Vec<f64>,
    pub seed_fingerprint: u64,
}

impl TrainHistory {
    /// Copy with timing zeroed, suitable for bit-identical comparison.
    pub fn normalized(&self) -> TrainHistory {
        TrainHistory {
            epoch_losses: self.epoch_losses.clone(),
            epoch_seconds: vec![0.0; self.epoch_seconds.len()],
            seed_fingerprint: self.seed_fingerprint,
        }
    }
}

/// Trains encoder, head, and representation blocks jointly on a normalized
/// training set. Returns the final parameters and the loss trace.
pub fn train<S: Scalar>(
    train_ds: &Dataset<S>,
    model_cfg: ModelConfig,
    cfg: &TrainConfig,
    aug_cfg: &AugmentationConfig,
) -> Result<(ModelParams<S>, TrainHistory)> {
    cfg.validate()?;
    let n = train_ds.n_rows();
    if n < MIN_BATCH {
        return Err(Error::config(format!(
            "training set has {n} rows; need at least {MIN_BATCH}"
        )));
    }
    if cfg.loss.needs_labels() && train_ds.labels().is_none() {
        return Err(Error::config(
            "supervised losses need a labeled training set",
        ));
    }

    let mut params = ModelParams::init(train_ds.schema(), model_cfg, cfg.seed);
    let augmenter = Augmenter::new(aug_cfg, train_ds)?;
    let mut adam = AdamState::new(&params);
    let lr = S::cast(cfg.learning_rate);
    let tau = S::cast(cfg.temperature);

    let mut history = TrainHistory {
        epoch_losses: Vec::with_capacity(cfg.epochs),
        epoch_seconds: Vec::with_capacity(cfg.epochs),
        seed_fingerprint: rng::derive_seed(cfg.seed, tag::SHUFFLE, cfg.epochs as u64),
    };

    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..cfg.epochs {
        let started = Instant::now();
        let mut shuffle_rng = rng::stream(cfg.seed, tag::SHUFFLE, epoch as u64);
        rng::shuffle(&mut shuffle_rng, &mut order);

        let mut loss_sum = 0.0f64;
        let mut batches = 0usize;
        let mut base = 0usize;
        while base < n {
            let end = (base + cfg.batch_size).min(n);
            if end - base < MIN_BATCH {
                break; // drop the short tail
            }
            let batch_idx = &order[base..end];
            let anchors: Vec<&[S]> = batch_idx.iter().map(|&r| train_ds.row(r)).collect();
            let pairs = make_views(&anchors, &augmenter, train_ds, epoch as u64, base as u64)?;

            // Flatten to [lefts..., rights...]; partner(i) = i + N.
            let batch_n = pairs.len();
            let mut rows: Vec<Vec<S>> = Vec::with_capacity(2 * batch_n);
            for (left, _) in &pairs {
                rows.push(left.clone());
            }
            for (_, right) in pairs {
                rows.push(right);
            }
            let labels: Option<Vec<u32>> = if cfg.loss.needs_labels() {
                let ls = train_ds.labels().expect("checked above");
                let anchor_labels: Vec<u32> =
                    batch_idx.iter().map(|&r| ls[r] as u32).collect();
                let mut doubled = anchor_labels.clone();
                doubled.extend(anchor_labels);
                Some(doubled)
            } else {
                None
            };

            let (loss, grads) = backward(&params, &rows, labels.as_deref(), cfg.loss, tau)?;
            match cfg.optimizer {
                OptimizerKind::Adam => adam_step(&mut adam, &mut params, &grads, lr),
                OptimizerKind::Sgd => sgd_step(&mut params, &grads, lr),
            }
            loss_sum += loss.to_f64_lossy();
            batches += 1;
            base = end;
        }
        if batches == 0 {
            return Err(Error::config(
                "no usable batches per epoch; shrink batch_size or add rows",
            ));
        }
        history.epoch_losses.push(loss_sum / batches as f64);
        history
            .epoch_seconds
            .push(started.elapsed().as_secs_f64());
    }
    Ok((params, history))
}
