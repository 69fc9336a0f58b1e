use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use apk_core::baseline::baseline;
use apk_core::evaluation::synthetic_wor_dataset;
use apk_core::{EvaluationReport, ModelSpec};

fn apk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_apk"))
        .args(args)
        .output()
        .expect("spawn apk")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", stderr(out));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn baseline_structured_matches_library() {
    let v = json(&apk(&[
        "baseline",
        "--wor",
        "50",
        "25",
        "--k",
        "5",
        "--format",
        "structured",
    ]));
    let exact = baseline(&ModelSpec::wor(50, 25).unwrap(), 5).unwrap();
    assert_eq!(v["mean"].as_f64().unwrap(), exact.mean);
    assert_eq!(v["variance"].as_f64().unwrap(), exact.variance);
    assert_eq!(v["norm"], "bymin");

    let v = json(&apk(&["baseline", "--wr", "0.5", "--k", "5", "--format", "structured"]));
    assert!((v["mean"].as_f64().unwrap() - 0.3641666666666667).abs() < 1e-15);
    assert_eq!(v["norm"], "byk");
}

#[test]
fn baseline_text_and_errors() {
    let out = apk(&["baseline", "--wor", "50", "25", "--k", "5"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("mean      0.361395"), "{text}");

    let out = apk(&["baseline", "--wor", "10", "3", "--k", "11"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("error: "), "{}", stderr(&out));

    let out = apk(&["baseline", "--wor", "10", "3", "--wr", "0.3", "--k", "2"]);
    assert!(!out.status.success());
}

#[test]
fn scenarios_listing_and_check() {
    let out = apk(&["scenarios"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for label in ["A1", "A2", "A3", "B", "C", "D"] {
        assert!(text.lines().any(|l| l.starts_with(label)), "{text}");
    }

    let out = apk(&["scenarios", "--check"]);
    let text = stdout(&out);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(text.matches("DEVIATION").count(), 3, "{text}");
    assert!(text.contains("check: FAIL"));

    let v = json(&apk(&["scenarios", "--format", "structured"]));
    assert_eq!(v["rows"].as_array().unwrap().len(), 6);
}

#[test]
fn scenarios_custom_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("grid.txt");
    fs::write(&cfg, "# label N m p k\nsmall 12 3 0.25 4\n").unwrap();
    let out = apk(&["scenarios", "--config", cfg.to_str().unwrap(), "--check"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("0 row(s) compared"));

    fs::write(&cfg, "broken 12 3\n").unwrap();
    let out = apk(&["scenarios", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains(":1"), "{}", stderr(&out));
}

#[test]
fn simulate_is_reproducible() {
    let args = [
        "simulate",
        "--wor",
        "50",
        "25",
        "--k",
        "5",
        "-n",
        "50000",
        "--seed",
        "7",
        "--format",
        "structured",
    ];
    let a = apk(&args);
    let b = apk(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);

    let v = json(&a);
    let mean = v["sample"]["mean"].as_f64().unwrap();
    let se = v["sample"]["std_error"].as_f64().unwrap();
    let exact = v["analytic"]["mean"].as_f64().unwrap();
    assert!((mean - exact).abs() < 5.0 * se);

    let other = apk(&[
        "simulate",
        "--wor",
        "50",
        "25",
        "--k",
        "5",
        "-n",
        "50000",
        "--seed",
        "8",
        "--format",
        "structured",
    ]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn simulate_degenerate_model() {
    let v = json(&apk(&[
        "simulate",
        "--wor",
        "5",
        "5",
        "--k",
        "3",
        "-n",
        "1000",
        "--format",
        "structured",
    ]));
    assert_eq!(v["sample"]["mean"].as_f64().unwrap(), 1.0);
    assert_eq!(v["sample"]["std_error"].as_f64().unwrap(), 0.0);
}

#[test]
fn simulate_other_normalization_has_no_analytic() {
    let out = apk(&["simulate", "--wr", "0.3", "--k", "5", "-n", "1000", "--norm", "bymin"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("analytic        n/a"));
}

fn read_hist(path: &Path) -> Vec<(f64, f64, u64)> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["bin_lo", "bin_hi", "count"]);
    rdr.deserialize().map(|r| r.unwrap()).collect()
}

#[test]
fn hist_csv_counts_and_centres() {
    let dir = tempfile::tempdir().unwrap();
    let wor_path = dir.path().join("wor.csv");
    let wr_path = dir.path().join("wr.csv");
    for (model, path) in [(["--wor", "50", "25"], &wor_path), (["--wr", "0.5", ""], &wr_path)] {
        let mut args = vec!["hist"];
        args.extend(model.iter().filter(|s| !s.is_empty()));
        args.extend([
            "--k",
            "40",
            "-n",
            "20000",
            "--seed",
            "3",
            "--out",
            path.to_str().unwrap(),
        ]);
        let out = apk(&args);
        assert!(out.status.success(), "{}", stderr(&out));
        assert!(stdout(&out).starts_with("wrote 40 bins"));
    }
    let wor = read_hist(&wor_path);
    let wr = read_hist(&wr_path);
    assert_eq!(wor.len(), 40);
    assert_eq!(wor.iter().map(|r| r.2).sum::<u64>(), 20_000);
    assert_eq!(wr.iter().map(|r| r.2).sum::<u64>(), 20_000);
    assert_eq!(wor[0].0, 0.0);
    assert_eq!(wor[39].1, 1.0);
    let centre = |rows: &[(f64, f64, u64)]| rows.iter().map(|r| 0.5 * (r.0 + r.1) * r.2 as f64).sum::<f64>() / 20_000.0;
    assert!(centre(&wor) > centre(&wr) + 0.1);
}

#[test]
fn enumerate_probabilities_sum_to_one() {
    let out = apk(&["enumerate", "--wor", "10", "4", "--k", "6"]);
    assert!(out.status.success());
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    let rows: Vec<(f64, f64)> = rdr.deserialize().map(|r| r.unwrap()).collect();
    let total: f64 = rows.iter().map(|r| r.1).sum();
    assert!((total - 1.0).abs() < 1e-12);
    let mean: f64 = rows.iter().map(|r| r.0 * r.1).sum();
    let exact = baseline(&ModelSpec::wor(10, 4).unwrap(), 6).unwrap();
    assert!((mean - exact.mean).abs() < 1e-12);
    assert!(rows.windows(2).all(|w| w[0].0 < w[1].0));
}

fn write_dataset(dir: &Path, items: usize, relevant: usize, users: usize, seed: u64) -> (String, String) {
    let (run, qrels) = synthetic_wor_dataset(items, relevant, users, seed).unwrap();
    let run_path = dir.join("run.txt");
    let qrels_path = dir.join("qrels.txt");
    run.write_trec(fs::File::create(&run_path).unwrap(), "null").unwrap();
    qrels.write_qrels(fs::File::create(&qrels_path).unwrap()).unwrap();
    (
        run_path.to_str().unwrap().to_owned(),
        qrels_path.to_str().unwrap().to_owned(),
    )
}

#[test]
fn evaluate_null_run_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let (run, qrels) = write_dataset(dir.path(), 50, 25, 2000, 11);
    let report_path = dir.path().join("report.json");
    let out = apk(&[
        "evaluate",
        "--run",
        &run,
        "--qrels",
        &qrels,
        "--k",
        "25",
        "--auto-wor",
        "50",
        "--out",
        report_path.to_str().unwrap(),
        "--format",
        "structured",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let printed: EvaluationReport = serde_json::from_slice(&out.stdout).unwrap();
    let saved: EvaluationReport = serde_json::from_str(&fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(printed, saved);
    assert_eq!(printed.user_count, 2000);
    assert!(printed.z_score.unwrap().abs() < 5.0);
    let exact = baseline(&ModelSpec::wor(50, 25).unwrap(), 25).unwrap();
    assert_eq!(printed.baseline_mean, exact.mean);
}

#[test]
fn evaluate_perfect_run() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run.txt");
    let qrels = dir.path().join("qrels.txt");
    let mut run_text = String::new();
    let mut qrels_text = String::new();
    for q in 0..20 {
        for d in 0..10 {
            run_text.push_str(&format!("q{q} Q0 d{d} {} {} perfect\n", d + 1, 10 - d));
            if d < 3 {
                qrels_text.push_str(&format!("q{q} 0 d{d} 1\n"));
            }
        }
    }
    fs::write(&run, run_text).unwrap();
    fs::write(&qrels, qrels_text).unwrap();
    let out = apk(&[
        "evaluate",
        "--run",
        run.to_str().unwrap(),
        "--qrels",
        qrels.to_str().unwrap(),
        "--k",
        "5",
        "--auto-wor",
        "10",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("MAP@k                    1.00000"), "{text}");
    let z_line = text.lines().find(|l| l.starts_with("z-score")).unwrap();
    let z: f64 = z_line.split_whitespace().last().unwrap().parse().unwrap();
    assert!(z > 5.0, "{text}");
}

#[test]
fn evaluate_reports_missing_file() {
    let dir = tempfile::tempdir().unwrap();
    let (run, _) = write_dataset(dir.path(), 10, 2, 3, 1);
    let missing = dir.path().join("absent.qrels");
    let out = apk(&[
        "evaluate",
        "--run",
        &run,
        "--qrels",
        missing.to_str().unwrap(),
        "--k",
        "3",
        "--auto-wor",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("absent.qrels"), "{}", stderr(&out));
}

#[test]
fn evaluate_rejects_mismatched_normalization() {
    let dir = tempfile::tempdir().unwrap();
    let (run, qrels) = write_dataset(dir.path(), 10, 2, 3, 1);
    let out = apk(&[
        "evaluate",
        "--run",
        &run,
        "--qrels",
        &qrels,
        "--k",
        "3",
        "--auto-wor",
        "10",
        "--norm",
        "byk",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn evaluate_pooled_wr() {
    let dir = tempfile::tempdir().unwrap();
    let (run, qrels) = write_dataset(dir.path(), 40, 8, 500, 5);
    let v = json(&apk(&[
        "evaluate",
        "--run",
        &run,
        "--qrels",
        &qrels,
        "--k",
        "10",
        "--auto-wr",
        "--format",
        "structured",
    ]));
    let p = v["p_hat"].as_f64().unwrap();
    assert!((p - 0.2).abs() < 0.02, "{p}");
    assert_eq!(v["norm"], "byk");
}
