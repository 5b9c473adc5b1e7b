//! End-to-end checks of the CLI surface: subcommands, file outputs, exit
//! codes and reproducibility of `run` invocations.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fs-bench"))
}

fn write_toy_csv(path: &Path, rows: usize) {
    let mut text = String::from("a,b,c,y\n");
    for i in 0..rows {
        let a = (i * 7 % 13) % 2;
        let b = (i * 5 % 11) % 2;
        let c = (i * 37 % 97) as f64 / 97.0;
        text.push_str(&format!("{a},{b},{c:.4},{}\n", a ^ b));
    }
    std::fs::write(path, text).unwrap();
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn cost_model_prints_exact_units() {
    let out = bin()
        .args(["cost-model", "--r", "13", "--e", "50", "--q", "10", "--f", "10"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["chc_total_units"], 650.0);
    assert_eq!(doc["chc_qx_total_units"], 635.0);
    assert_eq!(doc["chc_qx_cheaper"], true);
    assert_eq!(doc["crossover_generations"], 13);
}

#[test]
fn run_writes_report_and_reproduces_it() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("toy.csv");
    write_toy_csv(&data, 120);
    let config = dir.path().join("small.toml");
    std::fs::write(
        &config,
        "[chc]\npopulation_size = 8\nmax_generations = 4\n\n[qx]\nprobe_count = 4\ncontrol_frequency = 2\n",
    )
    .unwrap();

    let run = |out_dir: &Path| -> serde_json::Value {
        let out = bin()
            .args([
                "run",
                "--data",
                data.to_str().unwrap(),
                "--label",
                "y",
                "--method",
                "chc_qx",
                "--seeds",
                "5",
                "--config",
                config.to_str().unwrap(),
                "--out",
                out_dir.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
        let report = std::fs::read_to_string(out_dir.join("run_chc_qx_seed5.json")).unwrap();
        serde_json::from_str(&report).unwrap()
    };

    let first_dir = dir.path().join("first");
    let second_dir = dir.path().join("second");
    let first = run(&first_dir);
    let second = run(&second_dir);

    // identical masks, trajectories and counters; wall times may differ
    assert_eq!(first["best_mask"], second["best_mask"]);
    assert_eq!(first["counters"], second["counters"]);
    let fitness_of = |doc: &serde_json::Value| -> Vec<String> {
        doc["records"]
            .as_array()
            .unwrap()
            .iter()
            .map(|r| format!("{}:{}", r["generation"], r["best_original_fitness"]))
            .collect()
    };
    assert_eq!(fitness_of(&first), fitness_of(&second));
    assert_eq!(
        first["final_summary"]["test_accuracy"],
        second["final_summary"]["test_accuracy"]
    );
    assert_eq!(first["meta"]["seed"], 5);
}

#[test]
fn run_respects_default_out_env() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("toy.csv");
    write_toy_csv(&data, 60);
    let out_dir = dir.path().join("env_out");
    let out = bin()
        .args([
            "run",
            "--data",
            data.to_str().unwrap(),
            "--label",
            "y",
            "--method",
            "baseline",
            "--seeds",
            "1",
        ])
        .env("FS_BENCH_OUT", &out_dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(out_dir.join("run_baseline_seed1.json").exists());
}

#[test]
fn seedless_run_records_drawn_seed() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("toy.csv");
    write_toy_csv(&data, 60);
    let out = bin()
        .args([
            "run",
            "--data",
            data.to_str().unwrap(),
            "--label",
            "y",
            "--method",
            "baseline",
            "--out",
            dir.path().to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("seed="), "stdout should echo the drawn seed: {text}");
}

#[test]
fn curves_emit_flat_csv() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("toy.csv");
    write_toy_csv(&data, 200);

    let out = bin()
        .args([
            "curve-learning",
            "--data",
            data.to_str().unwrap(),
            "--label",
            "y",
            "--n0",
            "8",
            "--ratio",
            "2",
            "--seed",
            "3",
            "--out",
            dir.path().to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("learning_curve.csv")).unwrap();
    assert!(text.starts_with("sample_size,metric"));
    assert!(text.lines().count() > 3);

    let out = bin()
        .args([
            "curve-usefulness",
            "--data",
            data.to_str().unwrap(),
            "--label",
            "y",
            "--n0",
            "16",
            "--ratio",
            "2",
            "--q",
            "6",
            "--seed",
            "3",
            "--out",
            dir.path().to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("usefulness_curve.csv")).unwrap();
    let last = text.lines().last().unwrap();
    let rho: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(rho, 1.0, "full-sample correlation must be 1, got line `{last}`");
}

#[test]
fn exit_codes_distinguish_config_and_data_errors() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("toy.csv");
    write_toy_csv(&data, 40);

    // unknown method: configuration error
    let out = bin()
        .args(["run", "--data", data.to_str().unwrap(), "--label", "y", "--method", "annealing"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    // malformed config file: configuration error
    let bad_config = dir.path().join("bad.toml");
    std::fs::write(&bad_config, "[chc]\npopulation = 8\n").unwrap();
    let out = bin()
        .args([
            "run",
            "--data",
            data.to_str().unwrap(),
            "--label",
            "y",
            "--method",
            "chc",
            "--config",
            bad_config.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    // missing file: data error
    let out = bin()
        .args(["run", "--data", "/nonexistent.csv", "--label", "y", "--method", "baseline"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // absent label column: data error
    let out = bin()
        .args(["run", "--data", data.to_str().unwrap(), "--label", "target", "--method", "baseline"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // too few rows to split: data error
    let tiny = dir.path().join("tiny.csv");
    write_toy_csv(&tiny, 3);
    let out = bin()
        .args(["run", "--data", tiny.to_str().unwrap(), "--label", "y", "--method", "baseline"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    // bad schedule bounds: configuration error
    let out = bin()
        .args([
            "curve-learning",
            "--data",
            data.to_str().unwrap(),
            "--label",
            "y",
            "--n0",
            "0",
            "--ratio",
            "2",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    // unwritable output location: runtime failure
    let blocker = dir.path().join("blocker");
    std::fs::write(&blocker, "not a directory").unwrap();
    let out = bin()
        .args([
            "run",
            "--data",
            data.to_str().unwrap(),
            "--label",
            "y",
            "--method",
            "baseline",
            "--seeds",
            "1",
            "--out",
            blocker.join("reports").to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}
