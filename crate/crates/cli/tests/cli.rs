//! End-to-end checks of the `deepmkl` binary: every subcommand runs
//! against real files and produces the promised artifacts.

use std::io::Write;
use std::path::Path;
use std::process::{Command, Output};

fn deepmkl(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deepmkl"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_blob_csv(path: &Path, n_per: usize, sep: f64, seed: u64) {
    // deterministic LCG so the fixture needs no extra dependencies
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
    let mut next = move || {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    };
    let mut f = std::fs::File::create(path).unwrap();
    writeln!(f, "f1,f2,class").unwrap();
    for i in 0..2 * n_per {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        let a = sign * sep / 2.0 + next();
        let b = next();
        writeln!(f, "{a},{b},{}", if sign > 0.0 { "up" } else { "down" }).unwrap();
    }
}

#[test]
fn bounds_subcommand_prints_all_three_quantities() {
    let dir = tempfile::tempdir().unwrap();
    let out = deepmkl(
        &["bounds", "--layers", "3", "--sets", "1", "--kernels", "4"],
        dir.path(),
    );
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("pseudo-dimension bound: 12"));
    assert!(stdout.contains("2.449490")); // √6
    assert!(stdout.contains("rademacher"));
}

#[test]
fn bounds_single_layer_reports_undefined_width() {
    let dir = tempfile::tempdir().unwrap();
    let out = deepmkl(&["bounds", "--layers", "1", "--kernels", "4"], dir.path());
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("pseudo-dimension bound: 4"));
    assert!(stdout.contains("undefined"));
}

#[test]
fn fit_writes_a_model_file() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("toy.csv");
    write_blob_csv(&csv, 16, 2.5, 3);
    let out = deepmkl(
        &[
            "fit",
            "--data",
            csv.to_str().unwrap(),
            "--label",
            "class",
            "--layers",
            "2",
            "--objective",
            "span",
            "--eta",
            "0.1",
            "--c-svm",
            "10",
            "--iters",
            "12",
            "--seed",
            "7",
            "--out",
            "model.json",
        ],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let model: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("model.json")).unwrap())
            .unwrap();
    assert_eq!(model["arch"]["layers"], 2);
    assert_eq!(model["arch"]["kernels"].as_array().unwrap().len(), 4);
    let acc = model["test_accuracy"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&acc));
    assert!(model["svm"]["alpha"].as_array().unwrap().len() == 16);
}

#[test]
fn fit_is_deterministic_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("toy.csv");
    write_blob_csv(&csv, 12, 2.0, 5);
    for name in ["a.json", "b.json"] {
        let out = deepmkl(
            &[
                "fit",
                "--data",
                csv.to_str().unwrap(),
                "--label",
                "class",
                "--layers",
                "2",
                "--iters",
                "10",
                "--seed",
                "3",
                "--out",
                name,
            ],
            dir.path(),
        );
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let a = std::fs::read(dir.path().join("a.json")).unwrap();
    let b = std::fs::read(dir.path().join("b.json")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn run_and_stats_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let csv_a = dir.path().join("a.csv");
    let csv_b = dir.path().join("b.csv");
    write_blob_csv(&csv_a, 12, 2.0, 11);
    write_blob_csv(&csv_b, 12, 3.0, 12);
    let config = serde_json::json!({
        "datasets": [
            {"name": "toy-a", "path": csv_a, "label": "class"},
            {"name": "toy-b", "path": csv_b, "label": "class"},
        ],
        "methods": [
            {"objective": "span", "layers": 1},
            {"objective": "span", "layers": 2},
        ],
        "seeds": [1, 2],
        "train": {"max_iters": 8},
    });
    std::fs::write(dir.path().join("exp.json"), config.to_string()).unwrap();

    let out = deepmkl(&["run", "--config", "exp.json"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("| Rank |"));
    assert!(dir.path().join("results.json").exists());
    let md = std::fs::read_to_string(dir.path().join("results.md")).unwrap();
    assert!(md.contains("toy-a"));

    let out = deepmkl(
        &["stats", "--table", "results.json", "--reference", "span-2"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("span-1"));
    assert!(stdout.contains("mean rank"));
}

#[test]
fn run_rejects_unknown_config_keys() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("exp.json"),
        r#"{"datasets": [], "methods": [], "seeds": [], "surprise": true}"#,
    )
    .unwrap();
    let out = deepmkl(&["run", "--config", "exp.json"], dir.path());
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("surprise") || stderr.contains("unknown"));
}

#[test]
fn fit_reports_missing_label_column() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("toy.csv");
    write_blob_csv(&csv, 8, 2.0, 1);
    let out = deepmkl(
        &[
            "fit",
            "--data",
            csv.to_str().unwrap(),
            "--label",
            "nope",
            "--out",
            "m.json",
        ],
        dir.path(),
    );
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("nope"));
}
