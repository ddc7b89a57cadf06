//! End-to-end tests driving the compiled binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tabcl"))
}

/// Small-model arguments shared by the pipeline tests.
fn tiny_args(out: &Path, seed: u64) -> Vec<String> {
    [
        "--out",
        out.to_str().unwrap(),
        "--seed",
        &seed.to_string(),
        "--set",
        "data.n_per_class=60",
        "--set",
        "data.user_meta=5",
        "--set",
        "data.embedding_dim=8",
        "--set",
        "data.tweet_meta=4",
        "--set",
        "data.temporal=3",
        "--set",
        "data.class_separation=5.0",
        "--set",
        "train.epochs=25",
        "--set",
        "train.batch_size=32",
        "--set",
        "model.d=6",
        "--set",
        "model.out_dim=6",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

fn run(args: &[String], subcommand: &str) -> Output {
    let mut cmd = bin();
    cmd.arg(subcommand);
    cmd.args(args);
    cmd.output().expect("binary runs")
}

fn assert_ok(output: &Output, what: &str) {
    assert!(
        output.status.success(),
        "{what} failed: {}\n{}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

#[test]
fn pipeline_commands_produce_their_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let args = tiny_args(dir.path(), 7);

    assert_ok(&run(&args, "gen-data"), "gen-data");
    assert!(dir.path().join("data_a.csv").exists());
    assert!(dir.path().join("data_a.schema.json").exists());

    assert_ok(&run(&args, "train"), "train");
    assert!(dir.path().join("checkpoint.json").exists());

    assert_ok(&run(&args, "eval"), "eval");
    let eval: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("eval.json")).unwrap()).unwrap();
    let macro_f1 = eval["result"]["metrics"]["macro_f1"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&macro_f1));
    assert!(dir.path().join("probe.json").exists());

    // The effective config (with overrides applied) is embedded verbatim.
    assert_eq!(eval["config"]["train"]["epochs"], 25);
    assert_eq!(eval["config"]["model"]["d"], 6);
    assert_eq!(eval["seed"], 7);

    assert_ok(&run(&args, "export-embeddings"), "export-embeddings");
    let embeddings = fs::read_to_string(dir.path().join("embeddings.csv")).unwrap();
    let header = embeddings.lines().next().unwrap();
    assert_eq!(header, "id,h_0,h_1,h_2,h_3,h_4,h_5,label");
}

#[test]
fn identical_runs_write_byte_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = tiny_args(dir.path(), 11);
    args.push("--normalized".into());

    assert_ok(&run(&args, "gen-data"), "gen-data");
    assert_ok(&run(&args, "train"), "train first");
    let ckpt1 = fs::read(dir.path().join("checkpoint.json")).unwrap();
    let report1 = fs::read(dir.path().join("train.json")).unwrap();
    assert_ok(&run(&args, "train"), "train second");
    let ckpt2 = fs::read(dir.path().join("checkpoint.json")).unwrap();
    let report2 = fs::read(dir.path().join("train.json")).unwrap();
    assert_eq!(ckpt1, ckpt2, "checkpoints must be byte-identical");
    assert_eq!(report1, report2, "normalized train reports must be byte-identical");

    assert_ok(&run(&args, "eval"), "eval");
    let attack_args: Vec<String> = args
        .iter()
        .cloned()
        .chain(
            [
                "--set".to_string(),
                "attack.n_each=10".to_string(),
                "--set".to_string(),
                r#"attack.grids=[{feature="temporal_0", start=-2.0, end=2.0, step=1.0}]"#
                    .to_string(),
            ]
            .into_iter(),
        )
        .collect();
    assert_ok(&run(&attack_args, "attack"), "attack first");
    let a1 = fs::read(dir.path().join("attack.json")).unwrap();
    assert_ok(&run(&attack_args, "attack"), "attack second");
    let a2 = fs::read(dir.path().join("attack.json")).unwrap();
    assert_eq!(a1, a2, "normalized attack reports must be byte-identical");
}

#[test]
fn corruption_rate_sweep_emits_one_point_per_rate() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = tiny_args(dir.path(), 13);
    args.push("--set".into());
    args.push("sweep.corruption_rates=[0.4, 0.5, 0.6, 0.7, 0.8]".into());
    args.push("--set".into());
    args.push("train.epochs=10".into());

    assert_ok(&run(&args, "gen-data"), "gen-data");
    let mut cmd = bin();
    cmd.arg("sweep").arg("--axis").arg("corruption-rate");
    cmd.args(&args);
    let output = cmd.output().unwrap();
    assert_ok(&output, "sweep");
    let report: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("sweep_corruption_rate.json")).unwrap(),
    )
    .unwrap();
    let points = report["result"]["points"].as_array().unwrap();
    assert_eq!(points.len(), 5);
    let values: Vec<&str> = points.iter().map(|p| p["value"].as_str().unwrap()).collect();
    assert_eq!(values, ["0.4", "0.5", "0.6", "0.7", "0.8"]);
}

#[test]
fn gradcheck_defaults_pass_and_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let output = run(
        &["--out".into(), dir.path().to_str().unwrap().into()],
        "gradcheck",
    );
    assert_ok(&output, "gradcheck");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("gradcheck.json")).unwrap())
            .unwrap();
    assert_eq!(report["result"]["passed"], true);
    for entry in report["result"]["per_loss"].as_array().unwrap() {
        let err = entry[1]["max_relative_error"].as_f64().unwrap();
        assert!(err <= 1e-5, "{} > 1e-5", err);
    }
}

#[test]
fn errors_are_machine_readable_with_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    // eval without a checkpoint.
    let output = run(&tiny_args(dir.path(), 3), "eval");
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    let err: serde_json::Value =
        serde_json::from_str(stderr.lines().last().unwrap()).expect("stderr carries JSON");
    assert!(err["error"].as_str().unwrap().contains("data_a"));

    // Invalid config value.
    let mut args = tiny_args(dir.path(), 3);
    args.push("--set".into());
    args.push("train.epochs=\"many\"".into());
    let output = run(&args, "gen-data");
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    let err: serde_json::Value = serde_json::from_str(stderr.lines().last().unwrap()).unwrap();
    assert_eq!(err["kind"], "config");
}

#[test]
fn lobo_command_reports_both_directions() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = tiny_args(dir.path(), 17);
    args.push("--set".into());
    args.push("data.lobo_pair=true".into());

    assert_ok(&run(&args, "gen-data"), "gen-data");
    assert!(dir.path().join("data_b.csv").exists());
    assert_ok(&run(&args, "lobo"), "lobo");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("lobo.json")).unwrap()).unwrap();
    for key in ["within_a", "within_b", "a_to_b", "b_to_a"] {
        assert!(report["result"][key]["macro_f1"].is_f64(), "missing {key}");
    }
}

#[test]
fn config_file_and_overrides_compose() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("run.toml");
    fs::write(
        &config_path,
        r#"
seed = 5

[data]
n_per_class = 40
user_meta = 4
embedding_dim = 6
tweet_meta = 3
temporal = 2

[train]
epochs = 8
batch_size = 16

[model]
d = 4
out_dim = 4
"#,
    )
    .unwrap();
    let output = bin()
        .arg("gen-data")
        .arg("--config")
        .arg(&config_path)
        .arg("--out")
        .arg(dir.path())
        .arg("--set")
        .arg("data.n_per_class=30")
        .output()
        .unwrap();
    assert_ok(&output, "gen-data with config file");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("gen_data.json")).unwrap())
            .unwrap();
    assert_eq!(report["config"]["data"]["n_per_class"], 30); // override wins
    assert_eq!(report["config"]["train"]["epochs"], 8); // file value kept
    assert_eq!(report["result"]["rows_a"], 60);
}
