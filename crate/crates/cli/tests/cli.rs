use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hyperclass(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hyperclass"))
        .args(args)
        .output()
        .expect("spawn hyperclass")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json_stdout(o: &Output) -> Value {
    assert!(o.status.success(), "command failed: {}", stderr(o));
    serde_json::from_slice(&o.stdout).expect("stdout is a JSON report")
}

fn synth(dir: &Path, classes: &str) -> String {
    let out = dir.join("corpus");
    let o = hyperclass(&[
        "gen-synth", "--out", out.to_str().unwrap(), "--classes", classes, "--per-class", "30", "--dim", "16",
        "--seed", "3",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    out.to_str().unwrap().to_owned()
}

#[test]
fn theory_check_passes_on_a_small_run() {
    let o = hyperclass(&["theory-check", "--dim", "8", "--trials", "10"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = String::from_utf8_lossy(&o.stdout);
    assert!(table.contains("gradcheck"));
    assert!(!table.contains("FAIL"));
}

#[test]
fn bad_arguments_exit_with_usage_status() {
    let o = hyperclass(&["eval-irrf", "--not-a-flag"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"));

    let o = hyperclass(&["eval-irrf"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--features"));

    let o = hyperclass(&["theory-check", "--dim", "4", "--support", "4"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn help_lists_defaults() {
    let o = hyperclass(&["meta-train", "--help"]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("[default: 300]"));
    assert!(text.contains("[default: 0.5]"));
}

#[test]
fn hc_needs_a_model() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth(dir.path(), "12");
    let o = hyperclass(&["eval-fsocc", "--features", &corpus]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--ckpt"));
}

#[test]
fn train_then_evaluate_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth(dir.path(), "60");
    let ckpt = dir.path().join("model.ckpt");
    let report = dir.path().join("train.json");
    let o = hyperclass(&[
        "--threads", "2", "meta-train", "--features", &corpus, "--task", "fsocc", "--meta-batches", "6",
        "--tasks-per-batch", "4", "--eval-every", "3", "--val-episodes", "40", "--out",
        ckpt.to_str().unwrap(), "--report", report.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let train: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(train["command"], "meta-train");
    assert_eq!(train["config"]["meta-batches"], 6);
    assert_eq!(train["result"]["history"].as_array().unwrap().len(), 6);

    let ck = ckpt.to_str().unwrap();
    let fsocc = json_stdout(&hyperclass(&[
        "eval-fsocc", "--features", &corpus, "--ckpt", ck, "--episodes", "60", "--calibration-episodes", "20",
    ]));
    let auroc = fsocc["result"]["auroc"]["mean"].as_f64().unwrap();
    assert!(auroc > 0.5 && auroc <= 1.0, "{auroc}");
    assert_eq!(fsocc["result"]["model"]["meta_batch_index"], train["result"]["best_meta_batch"]);

    let fsor = json_stdout(&hyperclass(&["eval-fsor", "--features", &corpus, "--ckpt", ck, "--episodes", "30"]));
    assert_eq!(fsor["result"]["auroc"]["episodes"], 30);

    let irrf = json_stdout(&hyperclass(&[
        "eval-irrf", "--features", &corpus, "--ckpt", ck, "--seeds", "1", "--queries-per-class", "1", "--iterations",
        "2",
    ]));
    assert_eq!(irrf["result"]["curve"]["points"].as_array().unwrap().len(), 3);
}

#[test]
fn config_files_overlay_and_validate() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth(dir.path(), "12");
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        format!(r#"{{"command": "eval-fsocc", "features": "{corpus}", "method": "proto", "episodes": 30}}"#),
    )
    .unwrap();
    let c = cfg.to_str().unwrap();
    let r = json_stdout(&hyperclass(&["eval-fsocc", "--config", c, "--episodes", "25", "--calibration-episodes", "10"]));
    assert_eq!(r["result"]["fsocc"]["method"], "proto");
    assert_eq!(r["result"]["auroc"]["episodes"], 25);

    // the same run twice gives the same numbers
    let again = json_stdout(&hyperclass(&["eval-fsocc", "--config", c, "--episodes", "25", "--calibration-episodes", "10"]));
    assert_eq!(r["result"]["auroc"], again["result"]["auroc"]);

    std::fs::write(&cfg, r#"{"command": "eval-fsocc", "episodez": 30}"#).unwrap();
    let o = hyperclass(&["eval-fsocc", "--config", c]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("episodez"));

    std::fs::write(&cfg, r#"{"command": "meta-train"}"#).unwrap();
    assert!(!hyperclass(&["eval-fsocc", "--config", c]).status.success());
}
