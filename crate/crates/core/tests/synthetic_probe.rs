//! Chance-level and Bayes-separability oracles for the synthetic generator:
//! a probe fit on raw features must sit at chance for coincident clusters
//! and near-perfect at wide separation.

use tabcl::dataset::{generate_synthetic, split_dataset, FeatureSchema, SyntheticConfig};
use tabcl::evaluation::{fit_probe, metrics, predict, ProbeConfig};
use tabcl::DatasetF64;

fn raw_probe_macro_f1(separation: f64, seed: u64) -> f64 {
    let ds: DatasetF64 = generate_synthetic(&SyntheticConfig {
        n_per_class: 1000,
        class_separation: separation,
        seed,
        schema: FeatureSchema::synthetic(4, 4, 3, 2).unwrap(),
    })
    .unwrap();
    let (train, test) = split_dataset(&ds, 0.2, seed).unwrap();
    let embeddings: Vec<Vec<f64>> = (0..train.n_rows()).map(|r| train.row(r).to_vec()).collect();
    let probe = fit_probe(
        &embeddings,
        train.labels().unwrap(),
        &ProbeConfig {
            max_iters: 2000,
            ..ProbeConfig::default()
        },
    )
    .unwrap();
    let preds: Vec<u8> = (0..test.n_rows())
        .map(|r| predict(&probe, test.row(r)).0)
        .collect();
    metrics(&preds, test.labels().unwrap()).unwrap().macro_f1
}

#[test]
fn zero_separation_scores_at_chance() {
    let f1 = raw_probe_macro_f1(0.0, 21);
    assert!((f1 - 0.5).abs() <= 0.05, "macro-F1 {f1} not near chance");
}

#[test]
fn wide_separation_scores_near_perfect() {
    let f1 = raw_probe_macro_f1(8.0, 22);
    assert!(f1 >= 0.99, "macro-F1 {f1} below the Bayes-error expectation");
}
