//! End-to-end fitting and the leave-one-dataset-out generalization harness.

use super::metrics::{metrics, MetricsReport};
use super::probe::{fine_tune_probe, fit_probe};
use crate::dataset::{apply_normalizer, fit_normalizer, split_dataset, Dataset};
use crate::error::{Error, Result};
use crate::model::{encode, train, TrainHistory};
use crate::pipeline::{Pipeline, PipelineConfig};
use crate::scalar::Scalar;

/// Fits the full pipeline on a raw labeled training set: normalizer,
/// contrastive model, then the probe on frozen encoder outputs (or jointly
/// fine-tuned when the probe config opts in).
pub fn fit_pipeline<S: Scalar>(
    train_raw: &Dataset<S>,
    cfg: &PipelineConfig,
) -> Result<(Pipeline<S>, TrainHistory)> {
    let labels = train_raw
        .labels()
        .ok_or_else(|| Error::config("pipeline fitting needs labels for the probe"))?
        .to_vec();
    let stats = fit_normalizer(train_raw)?;
    let normed = apply_normalizer(&stats, train_raw)?;
    let (mut params, history) = train(&normed, cfg.model, &cfg.train, &cfg.augmentation)?;

    let embeddings: Vec<Vec<S>> = (0..normed.n_rows())
        .map(|r| encode(&params, normed.row(r)).map(|(h, _)| h))
        .collect::<Result<_>>()?;
    let mut probe = fit_probe(&embeddings, &labels, &cfg.probe)?;
    if cfg.probe.fine_tune {
        let rows: Vec<Vec<S>> = (0..normed.n_rows()).map(|r| normed.row(r).to_vec()).collect();
        fine_tune_probe(&mut params, &mut probe, &rows, &labels, &cfg.probe)?;
    }
    Ok((
        Pipeline {
            stats,
            params,
            probe,
        },
        history,
    ))
}

/// Evaluates a fitted pipeline on a raw labeled dataset.
pub fn evaluate_pipeline<S: Scalar>(
    pipeline: &Pipeline<S>,
    test_raw: &Dataset<S>,
) -> Result<MetricsReport> {
    let labels = test_raw
        .labels()
        .ok_or_else(|| Error::config("evaluation needs labels"))?;
    let preds = pipeline.predict_dataset(test_raw)?;
    metrics(&preds, labels)
}

/// Everything a within-dataset run produces.
pub struct OneClassOutcome<S> {
    pub pipeline: Pipeline<S>,
    pub history: TrainHistory,
    pub report: MetricsReport,
}

/// The within-dataset protocol: stratified split, fit on the training side,
/// evaluate on the held-out side.
pub fn run_one_class<S: Scalar>(
    ds: &Dataset<S>,
    cfg: &PipelineConfig,
) -> Result<OneClassOutcome<S>> {
    let (train_side, test_side) = split_dataset(ds, cfg.test_fraction, cfg.split_seed)?;
    let (pipeline, history) = fit_pipeline(&train_side, cfg)?;
    let report = evaluate_pipeline(&pipeline, &test_side)?;
    Ok(OneClassOutcome {
        pipeline,
        history,
        report,
    })
}

/// Leave-one-dataset-out: fit everything (normalizer included) on the
/// training split of `train_ds`, then evaluate on the held-out test split of
/// `target_ds`. With `target_ds == train_ds` this reproduces the
/// within-dataset run exactly.
pub fn lobo<S: Scalar>(
    train_ds: &Dataset<S>,
    target_ds: &Dataset<S>,
    cfg: &PipelineConfig,
) -> Result<MetricsReport> {
    if train_ds.schema() != target_ds.schema() {
        return Err(Error::config(
            "cross-dataset evaluation needs a shared schema",
        ));
    }
    let (train_side, _) = split_dataset(train_ds, cfg.test_fraction, cfg.split_seed)?;
    let (_, target_test) = split_dataset(target_ds, cfg.test_fraction, cfg.split_seed)?;
    let (pipeline, _) = fit_pipeline(&train_side, cfg)?;
    evaluate_pipeline(&pipeline, &target_test)
}
