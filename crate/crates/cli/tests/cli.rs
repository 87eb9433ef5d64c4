use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn nssvm(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nssvm"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("run nssvm")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn synth(dir: &TempDir, m: &str) {
    let out = nssvm(&["synth", "--m", m, "--seed", "3", "--train-out", "train.txt", "--test-out", "test.txt"], dir.path());
    assert_eq!(code(&out), 0);
}

fn write_model(dir: &Path, w: &[f64], b: f64) {
    let model = serde_json::json!({
        "n": w.len(),
        "b": b,
        "support": [],
        "alpha": [],
        "w": w,
        "config": {
            "profile": "real-default",
            "solver": "nssvm",
            "solver_config": {
                "base": {
                    "penalties": { "C": 0.25, "c": 0.0025 },
                    "eta": 0.5, "s": 1, "eps": 1e-6, "max_iter": 10
                },
                "sigma": 1.1, "max_it": 10, "acc_plateau_tol": 1e-4, "beta": null
            },
            "final_s": 1
        },
        "metrics": { "m": 2, "acc": 0.0, "tacc": null, "nsv": 0, "nsv_ratio": 0.0, "iters": 0, "converged": true }
    });
    fs::write(dir.join("model.json"), model.to_string()).unwrap();
}

#[test]
fn missing_file_and_bad_flags_exit_one() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&nssvm(&["train", "--data", "missing.txt"], dir.path())), 1);
    assert_eq!(code(&nssvm(&["train", "--data", "x.txt", "--no-such-flag"], dir.path())), 1);
    assert_eq!(code(&nssvm(&["bench"], dir.path())), 1);
    assert_eq!(code(&nssvm(&["--help"], dir.path())), 0);
}

#[test]
fn train_predict_round_trip_reproduces_training_accuracy() {
    let dir = TempDir::new().unwrap();
    synth(&dir, "400");
    let out = nssvm(&["train", "--data", "train.txt", "--test", "test.txt", "--profile", "synth-small"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let model: Value = serde_json::from_slice(&fs::read(dir.path().join("model.json")).unwrap()).unwrap();
    let support = model["support"].as_array().unwrap();
    assert_eq!(support.len(), model["alpha"].as_array().unwrap().len());
    assert_eq!(support.len() as u64, model["metrics"]["nsv"].as_u64().unwrap());
    assert_eq!(model["n"], 2);
    let acc = model["metrics"]["acc"].as_f64().unwrap();

    let out = nssvm(&["predict", "--model", "model.json", "--data", "train.txt", "--output", "pred.txt"], dir.path());
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains(&format!("TACC={acc:.2}%")), "{}", stdout(&out));
    let labels = fs::read_to_string(dir.path().join("pred.txt")).unwrap();
    assert_eq!(labels.lines().count(), 400);
    assert!(labels.lines().all(|l| l == "1" || l == "-1"));
}

#[test]
fn scaled_model_round_trip() {
    let dir = TempDir::new().unwrap();
    synth(&dir, "300");
    let out = nssvm(&["train", "--data", "train.txt", "--scale", "--profile", "synth-small"], dir.path());
    assert_eq!(code(&out), 0);
    let model: Value = serde_json::from_slice(&fs::read(dir.path().join("model.json")).unwrap()).unwrap();
    let acc = model["metrics"]["acc"].as_f64().unwrap();
    let out = nssvm(&["predict", "--model", "model.json", "--data", "train.txt", "--output", "p.txt"], dir.path());
    assert!(stdout(&out).contains(&format!("TACC={acc:.2}%")));
}

#[test]
fn sign_rule_and_hyperplane_convention() {
    let dir = TempDir::new().unwrap();
    write_model(dir.path(), &[1.0, 0.0], 0.0);
    fs::write(dir.path().join("pts.txt"), "0 1:2 2:5\n0 2:3\n0 1:-1\n").unwrap();
    let out = nssvm(&["predict", "--model", "model.json", "--data", "pts.txt"], dir.path());
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "1\n-1\n-1\n");
    assert!(!String::from_utf8_lossy(&out.stderr).contains("TACC"));
}

#[test]
fn predict_pads_narrow_files_and_rejects_wide_ones() {
    let dir = TempDir::new().unwrap();
    write_model(dir.path(), &[0.0, 1.0], 0.5);
    fs::write(dir.path().join("narrow.txt"), "-1 1:7\n").unwrap();
    let out = nssvm(&["predict", "--model", "model.json", "--data", "narrow.txt"], dir.path());
    assert_eq!(stdout(&out), "1\n");
    assert!(String::from_utf8_lossy(&out.stderr).contains("TACC=0.00%"));
    fs::write(dir.path().join("wide.txt"), "1 3:1\n").unwrap();
    let out = nssvm(&["predict", "--model", "model.json", "--data", "wide.txt"], dir.path());
    assert_eq!(code(&out), 1);
}

#[test]
fn serial_bench_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    for (name, fmt) in [("a.json", "json"), ("b.json", "json"), ("a.csv", "csv"), ("b.csv", "csv")] {
        let out = nssvm(
            &[
                "bench", "--synthetic", "--m", "1000", "--trials", "2", "--seed", "7", "--serial", "--no-timing",
                "--format", fmt, "--output", name,
            ],
            dir.path(),
        );
        assert_eq!(code(&out), 0);
    }
    let read = |n: &str| fs::read(dir.path().join(n)).unwrap();
    assert_eq!(read("a.json"), read("b.json"));
    assert_eq!(read("a.csv"), read("b.csv"));
    let csv = String::from_utf8(read("a.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("param,value,trial,m,solver,acc"));
    assert!(rows[1].contains(",7,1000,nssvm,"));
    assert!(rows[3].contains(",mean,"));
}

#[test]
fn train_is_reproducible_and_no_tune_uses_fixed_newton() {
    let dir = TempDir::new().unwrap();
    synth(&dir, "200");
    for out in ["m1.json", "m2.json"] {
        let o = nssvm(&["train", "--data", "train.txt", "--fixed-s", "10", "--no-tune", "--output", out], dir.path());
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let a = fs::read(dir.path().join("m1.json")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("m2.json")).unwrap());
    let model: Value = serde_json::from_slice(&a).unwrap();
    assert_eq!(model["config"]["solver"], "newton");
    assert_eq!(model["config"]["solver_config"]["sigma"], 1.0);
    assert!(model["support"].as_array().unwrap().len() <= 10);
    let conflict = nssvm(&["train", "--data", "train.txt", "--no-tune", "--solver", "nssvm"], dir.path());
    assert_eq!(code(&conflict), 1);
}

#[test]
fn non_convergence_exits_two_and_still_writes_the_model() {
    let dir = TempDir::new().unwrap();
    synth(&dir, "200");
    let out = nssvm(
        &["train", "--data", "train.txt", "--no-tune", "--fixed-s", "20", "--max-iter", "1", "--eps", "1e-30"],
        dir.path(),
    );
    assert_eq!(code(&out), 2);
    assert!(dir.path().join("model.json").exists());
}

#[test]
fn sweep_emits_one_block_per_value() {
    let dir = TempDir::new().unwrap();
    let out = nssvm(
        &[
            "bench", "--synthetic", "--m", "300", "--trials", "2", "--serial", "--no-timing", "--format", "csv",
            "--sweep", "s", "--values", "10,20,40",
        ],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let csv = stdout(&out);
    assert_eq!(csv.lines().count(), 1 + 3 * 3);
    for v in ["s,10.0,", "s,20.0,", "s,40.0,"] {
        assert_eq!(csv.lines().filter(|l| l.starts_with(v)).count(), 3, "{csv}");
    }
}

#[test]
fn bench_with_every_trial_failing_exits_one() {
    let dir = TempDir::new().unwrap();
    let out = nssvm(&["bench", "--synthetic", "--m", "50", "--s", "500", "--serial"], dir.path());
    assert_eq!(code(&out), 1);
}

#[test]
fn certify_converged_model_passes() {
    let dir = TempDir::new().unwrap();
    synth(&dir, "300");
    assert_eq!(code(&nssvm(&["train", "--data", "train.txt", "--profile", "synth-small"], dir.path())), 0);
    let out = nssvm(&["certify", "--data", "train.txt", "--model", "model.json"], dir.path());
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("η-stationary: PASS"), "{text}");
    assert!(text.contains("eta*"));
    assert!(text.contains("stationarity-only mode"));
}

#[test]
fn certify_reports_oracle_gap_on_small_instance() {
    let dir = TempDir::new().unwrap();
    let rows = [
        "1 1:1.0 2:0.3",
        "-1 1:-0.4 2:1.0",
        "1 1:0.8 2:-0.5",
        "-1 1:-1.2 2:0.1",
        "-1 1:0.2 2:0.9",
        "1 1:1.5 2:-0.2",
        "-1 1:-0.7 2:-0.3",
        "1 1:0.4 2:-1.1",
        "-1 1:-0.1 2:1.4",
        "1 1:0.9 2:0.6",
    ];
    fs::write(dir.path().join("tiny.txt"), rows.join("\n")).unwrap();
    let out = nssvm(&["certify", "--data", "tiny.txt", "--s", "2", "--no-tune", "--eta", "0.25"], dir.path());
    let text = stdout(&out);
    let gap_line = text.lines().find(|l| l.contains(", gap ")).expect("oracle gap reported");
    let gap: f64 = gap_line.rsplit("gap ").next().unwrap().trim().parse().unwrap();
    assert!(gap >= -1e-9, "{text}");
    if text.contains("η-stationary: PASS") {
        assert!(gap <= 1e-7, "{text}");
        assert_eq!(code(&out), 0);
    } else {
        assert_eq!(code(&out), 2);
    }
}

#[test]
fn certify_zero_model_names_violated_condition() {
    let dir = TempDir::new().unwrap();
    synth(&dir, "100");
    write_model(dir.path(), &[0.0, 0.0], -1.0);
    let out = nssvm(&["certify", "--data", "train.txt", "--model", "model.json"], dir.path());
    assert_eq!(code(&out), 2);
    let text = stdout(&out);
    assert!(text.contains("η-stationary: FAIL (violated: threshold"), "{text}");
}

#[test]
fn synth_is_deterministic() {
    let dir = TempDir::new().unwrap();
    synth(&dir, "50");
    let first = fs::read(dir.path().join("train.txt")).unwrap();
    synth(&dir, "50");
    assert_eq!(first, fs::read(dir.path().join("train.txt")).unwrap());
    assert_eq!(String::from_utf8(first).unwrap().lines().count(), 50);
}
