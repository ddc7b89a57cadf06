//! One function per CLI command. Everything operates on `f64` state.

use std::path::PathBuf;

use serde::Serialize;
use tabcl::adversarial::{attack_campaign, select_attack_samples, AttackReport};
use tabcl::augmentation::AugmentationKind;
use tabcl::checkpoint::Checkpoint;
use tabcl::dataset::{
    generate_lobo_pair, generate_synthetic, load_dataset, save_dataset, split_dataset,
};
use tabcl::evaluation::{
    evaluate_pipeline, fit_pipeline, grad_check, run_one_class, GradCheckReport, MetricsReport,
    ProbeParams,
};
use tabcl::model::{encode, LossKind, ModelConfig, ModelParams, TrainHistory};
use tabcl::pipeline::Pipeline;
use tabcl::rng::{standard_normal, stream, tag};
use tabcl::{DatasetF64, Scalar};

use crate::config::RunConfig;
use crate::report::{config_fingerprint, write_json, write_report};
use crate::CliError;

fn fill_report_identity(report: &mut MetricsReport, config: &RunConfig) {
    report.config_fingerprint = Some(config_fingerprint(config));
    report.seed = Some(config.seed);
}

#[derive(Serialize)]
struct GenDataResult {
    rows_a: usize,
    path_a: PathBuf,
    rows_b: Option<usize>,
    path_b: Option<PathBuf>,
}

pub fn gen_data(config: &RunConfig) -> Result<PathBuf, CliError> {
    let synth = config.data.synthetic_config(config.seed)?;
    let result = if config.data.lobo_pair {
        let shift = config.data.lobo_shift(config.seed);
        let (a, b): (DatasetF64, DatasetF64) = generate_lobo_pair(&synth, &shift)?;
        save_dataset(&a, &config.paths.data_a)?;
        save_dataset(&b, &config.paths.data_b)?;
        GenDataResult {
            rows_a: a.n_rows(),
            path_a: config.paths.data_a.clone(),
            rows_b: Some(b.n_rows()),
            path_b: Some(config.paths.data_b.clone()),
        }
    } else {
        let a: DatasetF64 = generate_synthetic(&synth)?;
        save_dataset(&a, &config.paths.data_a)?;
        GenDataResult {
            rows_a: a.n_rows(),
            path_a: config.paths.data_a.clone(),
            rows_b: None,
            path_b: None,
        }
    };
    write_report(config, "gen-data", "gen_data", result)
}

#[derive(Serialize)]
struct TrainResult {
    checkpoint: PathBuf,
    epochs_run: usize,
    final_loss: Option<f64>,
    history: TrainHistory,
}

pub fn train(config: &RunConfig, normalized: bool) -> Result<PathBuf, CliError> {
    let ds: DatasetF64 = load_dataset(&config.paths.data_a)?;
    let pipeline_cfg = config.pipeline();
    let (train_side, _) =
        split_dataset(&ds, pipeline_cfg.test_fraction, pipeline_cfg.split_seed)?;
    let stats = tabcl::dataset::fit_normalizer(&train_side)?;
    let normed = tabcl::dataset::apply_normalizer(&stats, &train_side)?;
    let (params, history) = tabcl::model::train(
        &normed,
        pipeline_cfg.model,
        &pipeline_cfg.train,
        &pipeline_cfg.augmentation,
    )?;
    let checkpoint = Checkpoint::new(
        ds.schema().clone(),
        pipeline_cfg.model,
        params,
        stats,
        pipeline_cfg.train.clone(),
        pipeline_cfg.augmentation.clone(),
        config.seed,
    );
    checkpoint.save(&config.paths.checkpoint)?;
    let history = if normalized { history.normalized() } else { history };
    let result = TrainResult {
        checkpoint: config.paths.checkpoint.clone(),
        epochs_run: history.epoch_losses.len(),
        final_loss: history.epoch_losses.last().copied(),
        history,
    };
    write_report(config, "train", "train", result)
}

#[derive(Serialize)]
struct ProbeArtifact {
    config_fingerprint: String,
    seed: u64,
    probe: ProbeParams<f64>,
}

#[derive(Serialize)]
struct EvalResult {
    metrics: MetricsReport,
    probe_path: PathBuf,
}

/// Loads the checkpoint, refits the probe on the training split's frozen
/// embeddings, and evaluates the held-out split.
pub fn eval(config: &RunConfig) -> Result<PathBuf, CliError> {
    let ds: DatasetF64 = load_dataset(&config.paths.data_a)?;
    let ckpt = Checkpoint::<f64>::load(&config.paths.checkpoint)?;
    ckpt.check_schema(ds.schema())?;
    if ckpt.seed != config.seed {
        log::warn!(
            "eval seed {} differs from the checkpoint's training seed {}; \
             the probe split will not match the training split",
            config.seed,
            ckpt.seed
        );
    }
    let pipeline_cfg = config.pipeline();
    let (train_side, test_side) =
        split_dataset(&ds, pipeline_cfg.test_fraction, pipeline_cfg.split_seed)?;
    let normed = tabcl::dataset::apply_normalizer(&ckpt.norm_stats, &train_side)?;
    let embeddings: Vec<Vec<f64>> = (0..normed.n_rows())
        .map(|r| encode(&ckpt.params, normed.row(r)).map(|(h, _)| h))
        .collect::<Result<_, _>>()?;
    let labels = train_side
        .labels()
        .ok_or_else(|| CliError::config("eval needs labels in the dataset"))?;
    let probe = tabcl::evaluation::fit_probe(&embeddings, labels, &pipeline_cfg.probe)?;
    write_json(
        &config.paths.probe,
        &ProbeArtifact {
            config_fingerprint: config_fingerprint(config),
            seed: config.seed,
            probe: probe.clone(),
        },
    )?;
    let pipeline = Pipeline {
        stats: ckpt.norm_stats,
        params: ckpt.params,
        probe,
    };
    let mut metrics = evaluate_pipeline(&pipeline, &test_side)?;
    fill_report_identity(&mut metrics, config);
    write_report(
        config,
        "eval",
        "eval",
        EvalResult {
            metrics,
            probe_path: config.paths.probe.clone(),
        },
    )
}

#[derive(Serialize)]
struct LoboResult {
    within_a: MetricsReport,
    within_b: MetricsReport,
    a_to_b: MetricsReport,
    b_to_a: MetricsReport,
}

/// Trains and evaluates in both directions across the two configured
/// datasets, reporting within-dataset baselines alongside. Each dataset is
/// fit once; training is deterministic, so evaluating that pipeline on both
/// test splits matches the one-fit-per-direction protocol bit for bit.
pub fn run_lobo(config: &RunConfig) -> Result<PathBuf, CliError> {
    let a: DatasetF64 = load_dataset(&config.paths.data_a)?;
    let b: DatasetF64 = load_dataset(&config.paths.data_b)?;
    if a.schema() != b.schema() {
        return Err(CliError::config(
            "cross-dataset evaluation needs a shared schema",
        ));
    }
    let cfg = config.pipeline();
    let (train_a, test_a) = split_dataset(&a, cfg.test_fraction, cfg.split_seed)?;
    let (train_b, test_b) = split_dataset(&b, cfg.test_fraction, cfg.split_seed)?;
    let (pipeline_a, _) = fit_pipeline(&train_a, &cfg)?;
    let (pipeline_b, _) = fit_pipeline(&train_b, &cfg)?;
    let mut within_a = evaluate_pipeline(&pipeline_a, &test_a)?;
    let mut within_b = evaluate_pipeline(&pipeline_b, &test_b)?;
    let mut a_to_b = evaluate_pipeline(&pipeline_a, &test_b)?;
    let mut b_to_a = evaluate_pipeline(&pipeline_b, &test_a)?;
    for m in [&mut within_a, &mut within_b, &mut a_to_b, &mut b_to_a] {
        fill_report_identity(m, config);
    }
    write_report(
        config,
        "lobo",
        "lobo",
        LoboResult {
            within_a,
            within_b,
            a_to_b,
            b_to_a,
        },
    )
}

fn load_pipeline(config: &RunConfig) -> Result<Pipeline<f64>, CliError> {
    let ckpt = Checkpoint::<f64>::load(&config.paths.checkpoint)?;
    let text = std::fs::read_to_string(&config.paths.probe).map_err(|e| {
        CliError::config(format!(
            "cannot read probe {} (run `eval` first): {e}",
            config.paths.probe.display()
        ))
    })?;
    let artifact: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::config(format!("invalid probe file: {e}")))?;
    let probe: ProbeParams<f64> = serde_json::from_value(
        artifact
            .get("probe")
            .cloned()
            .ok_or_else(|| CliError::config("probe file has no 'probe' field"))?,
    )
    .map_err(|e| CliError::config(format!("invalid probe params: {e}")))?;
    Ok(Pipeline {
        stats: ckpt.norm_stats,
        params: ckpt.params,
        probe,
    })
}

pub fn attack(config: &RunConfig, normalized: bool) -> Result<PathBuf, CliError> {
    let ds: DatasetF64 = load_dataset(&config.paths.data_a)?;
    let pipeline = load_pipeline(config)?;
    let spec = config.attack.spec(config.seed)?;
    let samples = select_attack_samples(&pipeline, &ds, config.attack.n_each, config.seed)?;
    let report: AttackReport = attack_campaign(&pipeline, &samples, &spec)?;
    let report = if normalized { report.normalized() } else { report };
    write_report(config, "attack", "attack", report)
}

#[derive(Serialize)]
struct SweepPoint {
    value: String,
    macro_f1: f64,
    weighted_f1: f64,
    metrics: MetricsReport,
}

#[derive(Serialize)]
struct SweepResult {
    axis: String,
    points: Vec<SweepPoint>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepAxis {
    CorruptionRate,
    BatchSize,
    Epochs,
    Loss,
}

impl SweepAxis {
    fn name(self) -> &'static str {
        match self {
            SweepAxis::CorruptionRate => "corruption_rate",
            SweepAxis::BatchSize => "batch_size",
            SweepAxis::Epochs => "epochs",
            SweepAxis::Loss => "loss",
        }
    }
}

/// Full train+eval per point along one ablation axis. Points run
/// sequentially unless `sweep.parallel` is set; the merged report is
/// ordered by the axis values either way.
pub fn sweep(config: &RunConfig, axis: SweepAxis) -> Result<PathBuf, CliError> {
    let ds: DatasetF64 = load_dataset(&config.paths.data_a)?;
    let variants: Vec<(String, RunConfig)> = match axis {
        SweepAxis::CorruptionRate => config
            .sweep
            .corruption_rates
            .iter()
            .map(|&rate| {
                let mut c = config.clone();
                c.augmentation.kind = AugmentationKind::Corruption;
                c.augmentation.corruption_rate = rate;
                (format!("{rate}"), c)
            })
            .collect(),
        SweepAxis::BatchSize => config
            .sweep
            .batch_sizes
            .iter()
            .map(|&bs| {
                let mut c = config.clone();
                c.train.batch_size = bs;
                (format!("{bs}"), c)
            })
            .collect(),
        SweepAxis::Epochs => config
            .sweep
            .epochs
            .iter()
            .map(|&e| {
                let mut c = config.clone();
                c.train.epochs = e;
                (format!("{e}"), c)
            })
            .collect(),
        SweepAxis::Loss => config
            .sweep
            .losses
            .iter()
            .map(|&loss| {
                let mut c = config.clone();
                c.train.loss = loss;
                let tag = match loss {
                    LossKind::SelfSupervised => "self",
                    LossKind::Supervised => "sup",
                    LossKind::SupervisedMod => "sup_mod",
                };
                (tag.to_string(), c)
            })
            .collect(),
    };
    if variants.is_empty() {
        return Err(CliError::config(format!(
            "sweep list for axis '{}' is empty",
            axis.name()
        )));
    }

    let run_point = |point_cfg: &RunConfig| -> Result<MetricsReport, CliError> {
        let mut report = run_one_class(&ds, &point_cfg.pipeline())?.report;
        fill_report_identity(&mut report, point_cfg);
        Ok(report)
    };

    let reports: Vec<Result<MetricsReport, CliError>> = if config.sweep.parallel {
        std::thread::scope(|scope| {
            let handles: Vec<_> = variants
                .iter()
                .map(|(_, cfg)| scope.spawn(|| run_point(cfg)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("sweep worker panicked"))
                .collect()
        })
    } else {
        variants.iter().map(|(_, cfg)| run_point(cfg)).collect()
    };

    let mut points = Vec::with_capacity(variants.len());
    for ((value, _), report) in variants.iter().zip(reports) {
        let metrics = report?;
        points.push(SweepPoint {
            value: value.clone(),
            macro_f1: metrics.macro_f1,
            weighted_f1: metrics.weighted_f1,
            metrics,
        });
    }
    write_report(
        config,
        "sweep",
        &format!("sweep_{}", axis.name()),
        SweepResult {
            axis: axis.name().to_string(),
            points,
        },
    )
}

#[derive(Serialize)]
struct GradcheckResult {
    passed: bool,
    tolerance: f64,
    per_loss: Vec<(String, GradCheckReport)>,
}

/// Finite-difference gradient verification on a seeded random instance, run
/// for all three losses. Exits nonzero when any loss misses the tolerance.
pub fn gradcheck(config: &RunConfig) -> Result<(PathBuf, bool), CliError> {
    let g = &config.gradcheck;
    let schema = tabcl::dataset::FeatureSchema::synthetic(
        g.user_meta,
        g.embedding_dim,
        g.tweet_meta,
        g.temporal,
    )?;
    let params = ModelParams::<f64>::init(
        &schema,
        ModelConfig {
            d: g.d,
            out_dim: g.out_dim,
        },
        config.seed,
    );
    let mut rng = stream(config.seed, tag::SYNTH, 97);
    let rows: Vec<Vec<f64>> = (0..2 * g.pairs)
        .map(|_| {
            (0..schema.total_width())
                .map(|_| standard_normal(&mut rng))
                .collect()
        })
        .collect();
    let labels: Vec<u32> = (0..g.pairs as u32)
        .map(|i| i % 2)
        .chain((0..g.pairs as u32).map(|i| i % 2))
        .collect();

    let mut per_loss = Vec::new();
    let mut passed = true;
    for (name, kind, labels) in [
        ("self", LossKind::SelfSupervised, None),
        ("sup", LossKind::Supervised, Some(labels.as_slice())),
        ("sup_mod", LossKind::SupervisedMod, Some(labels.as_slice())),
    ] {
        let report = grad_check(kind, &params, &rows, labels, g.eps)?;
        passed &= report.max_relative_error <= g.tolerance;
        per_loss.push((name.to_string(), report));
    }
    let path = write_report(
        config,
        "gradcheck",
        "gradcheck",
        GradcheckResult {
            passed,
            tolerance: g.tolerance,
            per_loss,
        },
    )?;
    Ok((path, passed))
}

/// Writes frozen encoder outputs for every row of the dataset as CSV.
pub fn export_embeddings(config: &RunConfig) -> Result<PathBuf, CliError> {
    let ds: DatasetF64 = load_dataset(&config.paths.data_a)?;
    let ckpt = Checkpoint::<f64>::load(&config.paths.checkpoint)?;
    ckpt.check_schema(ds.schema())?;
    let path = &config.paths.embeddings;
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)
                .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", dir.display())))?;
        }
    }
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| CliError::runtime(format!("cannot write {}: {e}", path.display())))?;
    let d = ckpt.params.d();
    let mut header = vec!["id".to_string()];
    header.extend((0..d).map(|i| format!("h_{i}")));
    if ds.labels().is_some() {
        header.push("label".into());
    }
    writer
        .write_record(&header)
        .map_err(|e| CliError::runtime(e.to_string()))?;
    let pipeline_stats = &ckpt.norm_stats;
    for r in 0..ds.n_rows() {
        let normed = {
            let mut row = ds.row(r).to_vec();
            // Exported embeddings use the checkpoint's training-set
            // normalization, same as the prediction path.
            pipeline_stats.apply_to_row(&mut row);
            row
        };
        let (h, _) = encode(&ckpt.params, &normed)?;
        let mut record = vec![ds.ids()[r].clone()];
        record.extend(h.iter().map(|v| v.to_f64_lossy().to_string()));
        if let Some(labels) = ds.labels() {
            record.push(labels[r].to_string());
        }
        writer
            .write_record(&record)
            .map_err(|e| CliError::runtime(e.to_string()))?;
    }
    writer
        .flush()
        .map_err(|e| CliError::runtime(e.to_string()))?;
    let result = serde_json::json!({ "embeddings": path, "rows": ds.n_rows() });
    write_report(config, "export-embeddings", "export_embeddings", result)
}
