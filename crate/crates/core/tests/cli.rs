mod common;

use std::process::Command;

use common::{dir_contents, run_cli_pipeline};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hypertime"))
}

#[test]
fn pipeline_reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [a.path(), b.path()] {
        for (cmd, code) in run_cli_pipeline(dir) {
            assert_eq!(code, 0, "{cmd} failed");
        }
    }
    let (fa, fb) = (dir_contents(&a.path().join("out")), dir_contents(&b.path().join("out")));
    let names: Vec<&str> = fa.iter().map(|(n, _)| n.as_str()).collect();
    for expected in [
        "multisine.tsv",
        "model.inr",
        "fit_report.json",
        "reconstruction.csv",
        "compare_activations.json",
        "imputation_report.json",
        "imputed_linear.csv",
        "hypertime.hyt",
        "train_report.json",
        "generated.tsv",
        "generated.json",
        "pca_generated.tsv",
        "eval_report.json",
        "projection.csv",
    ] {
        assert!(names.contains(&expected), "missing {expected}: {names:?}");
    }
    assert_eq!(fa.len(), fb.len());
    for ((na, da), (nb, db)) in fa.iter().zip(&fb) {
        assert_eq!(na, nb);
        assert!(da == db, "{na} differs between runs");
    }
}

#[test]
fn validation_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = bin()
        .args(["fit", "--data", "does-not-exist.tsv"])
        .env("HYPERTIME_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error:"));

    let bad_flag = bin().args(["fit", "--nope"]).output().unwrap();
    assert_eq!(bad_flag.status.code(), Some(1));

    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"inr": {"lr": -1}}"#).unwrap();
    let bad_cfg = bin()
        .args(["synth-data", "--preset", "multisine", "--config", cfg.to_str().unwrap()])
        .env("HYPERTIME_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(bad_cfg.status.code(), Some(1));
}

#[test]
fn help_exits_cleanly() {
    let out = bin().arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for cmd in ["fit", "reconstruct", "compare-activations", "impute", "train-hypertime", "generate", "baseline-pca", "evaluate", "synth-data"] {
        assert!(text.contains(cmd), "help lacks {cmd}");
    }
}

#[test]
fn out_dir_flag_beats_environment() {
    let env_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["synth-data", "--preset", "am-chirp", "--n", "4", "--length", "16", "--out-dir"])
        .arg(flag_dir.path())
        .env("HYPERTIME_OUT_DIR", env_dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(flag_dir.path().join("am_chirp.tsv").exists());
    assert!(std::fs::read_dir(env_dir.path()).unwrap().next().is_none());
}
