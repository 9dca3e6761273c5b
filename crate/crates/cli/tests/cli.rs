//! Runs the `calib` binary and validates its JSON against the shipped schemas.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const SCHEMAS: [&str; 6] = [
    "metric_reports",
    "calibrator_map",
    "calibrate_report",
    "certify_verdict",
    "decide_report",
    "platt_certificate",
];

fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn assert_valid(schema_name: &str, instance: &Value) {
    let mut options = jsonschema::JSONSchema::options();
    options.with_draft(jsonschema::Draft::Draft202012);
    for name in SCHEMAS {
        options.with_document(
            format!("urn:calib:schema:{name}"),
            read_json(&schema_dir().join(format!("{name}.schema.json"))),
        );
    }
    let schema = read_json(&schema_dir().join(format!("{schema_name}.schema.json")));
    let compiled = options.compile(&schema).unwrap();
    if let Err(errors) = compiled.validate(instance) {
        let messages: Vec<String> = errors.map(|e| format!("{} at {}", e, e.instance_path)).collect();
        panic!("{schema_name} rejected output: {messages:?}\n{instance:#}");
    };
}

fn calib(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_calib")).args(args).output().unwrap()
}

fn stdout_json(output: &Output) -> Value {
    assert!(
        output.status.success(),
        "exit {:?}: {}",
        output.status.code(),
        String::from_utf8_lossy(&output.stderr)
    );
    serde_json::from_slice(&output.stdout).unwrap()
}

fn write_csv(dir: &Path, name: &str, rows: &[String], header: &str) -> String {
    let path = dir.join(name);
    let mut body = format!("{header}\n");
    for row in rows {
        body.push_str(row);
        body.push('\n');
    }
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

/// Deterministic miscalibrated data: forecasts `k/20` whose true mean is
/// the squared forecast, with outcomes from a fixed low-discrepancy pattern.
fn squared_rows(n: usize, offset: usize) -> Vec<String> {
    (0..n)
        .map(|i| {
            let t = ((i * 7 + offset) % 21) as f64 / 20.0;
            let mu = t * t;
            let u = ((i * 13 + offset) % 100) as f64 / 100.0 + 0.005;
            let y = u8::from(u < mu);
            format!("{t},{y},{mu}")
        })
        .collect()
}

fn metric(reports: &Value, name: &str) -> f64 {
    reports
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["metric_name"] == name)
        .unwrap_or_else(|| panic!("missing {name}"))["value"]
        .as_f64()
        .unwrap()
}

#[test]
fn audit_calibrated_file_reports_zero_and_radius() {
    let dir = tempfile::tempdir().unwrap();
    let rows: Vec<String> = (0..100).map(|i| format!("{},{}", i % 2, i % 2)).collect();
    let input = write_csv(dir.path(), "calibrated.csv", &rows, "forecast,outcome");
    let reports = stdout_json(&calib(&["audit", "--input", &input]));
    assert_valid("metric_reports", &reports);
    assert_eq!(metric(&reports, "cutoff"), 0.0);
    let radius = reports[0]["params"]["radius"].as_f64().unwrap();
    let expected = (20.0 + (2.0 * 20.0_f64.ln()).sqrt()) / 10.0;
    assert!((radius - expected).abs() < 1e-12);
}

#[test]
fn audit_degenerate_file_reports_one() {
    let dir = tempfile::tempdir().unwrap();
    let rows = vec!["1,0".to_owned(); 100];
    let input = write_csv(dir.path(), "degenerate.csv", &rows, "forecast,outcome");
    let reports = stdout_json(&calib(&["audit", "--input", &input]));
    assert_valid("metric_reports", &reports);
    assert_eq!(metric(&reports, "cutoff"), 1.0);
    assert_eq!(metric(&reports, "lipschitz_wce"), 1.0);

    let csv = calib(&["audit", "--input", &input, "--format", "csv"]);
    assert!(csv.status.success());
    let text = String::from_utf8(csv.stdout).unwrap();
    assert!(text.starts_with("metric_name,value,n,delta,bins,radius,argmax_lo,argmax_hi\ncutoff,1.0,100,"));
}

#[test]
fn audit_adds_oracle_metrics_when_column_present() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_csv(
        dir.path(),
        "oracle.csv",
        &squared_rows(400, 0),
        "forecast,outcome,oracle_mean",
    );
    let out = dir.path().join("report.json");
    let status = calib(&["audit", "--input", &input, "--oracle", "--out", out.to_str().unwrap()]);
    assert!(status.status.success());
    let reports = read_json(&out);
    assert_valid("metric_reports", &reports);
    assert!(metric(&reports, "oracle_ece") >= metric(&reports, "oracle_cutoff") - 1e-12);
}

#[test]
fn input_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let plain = write_csv(dir.path(), "plain.csv", &["0.5,1".to_owned()], "forecast,outcome");
    let missing = calib(&["audit", "--input", &plain, "--oracle"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("oracle_mean"));

    let bad = write_csv(dir.path(), "bad.csv", &["1.5,0".to_owned()], "forecast,outcome");
    let range = calib(&["audit", "--input", &bad]);
    assert_eq!(range.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&range.stderr).contains("line 2"));

    assert_eq!(calib(&["audit", "--input", "/nonexistent.csv"]).status.code(), Some(2));
    assert_eq!(
        calib(&["audit", "--input", &plain, "--delta", "1.5"]).status.code(),
        Some(2)
    );
    assert_eq!(
        calib(&["certify", "--input", &plain, "--c", "0.2"]).status.code(),
        Some(2)
    );
    assert_eq!(calib(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn calibrate_isotonic_lowers_held_out_cutoff() {
    let dir = tempfile::tempdir().unwrap();
    let header = "forecast,outcome,oracle_mean";
    let train = write_csv(dir.path(), "train.csv", &squared_rows(5000, 0), header);
    let test = write_csv(dir.path(), "test.csv", &squared_rows(5000, 3), header);
    let map_path = dir.path().join("map.json");
    let report = stdout_json(&calib(&[
        "calibrate",
        "--method",
        "isotonic",
        "--input",
        &train,
        "--test",
        &test,
        "--out",
        map_path.to_str().unwrap(),
    ]));
    assert_valid("calibrate_report", &report);
    let map = read_json(&map_path);
    assert_valid("calibrator_map", &map);
    assert_eq!(map, report["map"]);
    let pre = metric(&report["held_out"]["pre"], "oracle_cutoff");
    let post = metric(&report["held_out"]["post"], "oracle_cutoff");
    assert!(post < pre, "pre {pre}, post {post}");
}

#[test]
fn calibrate_modified_platt_reports_its_check() {
    let dir = tempfile::tempdir().unwrap();
    let train = write_csv(
        dir.path(),
        "train.csv",
        &squared_rows(2000, 0),
        "forecast,outcome,oracle_mean",
    );
    for (epsilon, accepted) in [("1e-6", false), ("10", true)] {
        let report = stdout_json(&calib(&[
            "calibrate",
            "--method",
            "modified-platt",
            "--epsilon",
            epsilon,
            "--input",
            &train,
        ]));
        assert_valid("calibrate_report", &report);
        assert_eq!(report["modified_platt"]["accepted"], accepted);
        let kind = if accepted { "platt" } else { "constant" };
        assert_eq!(report["map"]["kind"], kind);
    }
    let misuse = calib(&["calibrate", "--method", "platt", "--epsilon", "0.1", "--input", &train]);
    assert_eq!(misuse.status.code(), Some(2));
}

#[test]
fn certify_is_deterministic_and_schema_valid() {
    let dir = tempfile::tempdir().unwrap();
    let rows: Vec<String> = (0..4000).map(|i| format!("{},{}", i % 2, i % 2)).collect();
    let input = write_csv(dir.path(), "data.csv", &rows, "forecast,outcome");
    let args = ["certify", "--input", &input, "--c", "0.9", "--shuffle-seed", "7"];
    let first = stdout_json(&calib(&args));
    assert_valid("certify_verdict", &first);
    assert_eq!(first["accepted"], true);
    assert_eq!(first["returned_model"]["model"]["kind"], "identity");
    assert_eq!(first, stdout_json(&calib(&args)));

    let recalibrated = stdout_json(&calib(&[
        "certify", "--input", &input, "--c", "0.9", "--method", "isotonic",
    ]));
    assert_valid("certify_verdict", &recalibrated);

    let wrong: Vec<String> = (0..4000).map(|_| "1,0".to_owned()).collect();
    let wrong = write_csv(dir.path(), "wrong.csv", &wrong, "forecast,outcome");
    let rejected = stdout_json(&calib(&["certify", "--input", &wrong, "--c", "0.9"]));
    assert_valid("certify_verdict", &rejected);
    assert_eq!(rejected["accepted"], false);
    assert_eq!(rejected["returned_model"]["kind"], "constant");
    assert_eq!(rejected["returned_model"]["value"], 0.0);
}

#[test]
fn decide_reproduces_perturbed_constant_gap() {
    let dir = tempfile::tempdir().unwrap();
    // forecasts 0.76 with mean 0 (one in four) and 0.74 with mean 1
    let rows: Vec<String> = (0..400)
        .map(|i| {
            if i % 4 == 0 {
                "0.76,0,0".to_owned()
            } else {
                "0.74,1,1".to_owned()
            }
        })
        .collect();
    let input = write_csv(dir.path(), "decide.csv", &rows, "forecast,outcome,oracle_mean");
    let report = stdout_json(&calib(&[
        "decide", "--input", &input, "--tau", "0.75", "--ystar", "0.5",
    ]));
    assert_valid("decide_report", &report);
    assert!((report["gap"].as_f64().unwrap() - 0.375).abs() < 1e-12);
    assert_eq!(report["bayes_risk"].as_f64().unwrap(), 0.0);
    assert!(report["risk_st"].as_f64().unwrap() > 0.0);

    let plain = write_csv(dir.path(), "plain.csv", &["0.5,1".to_owned()], "forecast,outcome");
    assert_eq!(
        calib(&["decide", "--input", &plain, "--tau", "0.5"]).status.code(),
        Some(2)
    );
}

#[test]
fn simulate_writes_record_columns_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| -> String {
        let out = dir.path().join(name);
        let output = Command::new(env!("CARGO_BIN_EXE_calib"))
            .env("CALIB_THREADS", "2")
            .args(["simulate", "--runs", "3", "--n-eval", "500", "--seed", "9", "--out"])
            .arg(&out)
            .output()
            .unwrap();
        assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
        std::fs::read_to_string(out).unwrap()
    };
    let first = run("a.csv");
    assert_eq!(
        first.lines().next().unwrap(),
        "alpha,cutoff,ece,lipschitz_wce,risk,bayes_risk,monotone_risk,gap,monotone_gap,seed"
    );
    assert_eq!(first.lines().count(), 4);
    assert_eq!(first, run("b.csv"));

    let bad_threads = Command::new(env!("CARGO_BIN_EXE_calib"))
        .env("CALIB_THREADS", "zero")
        .args(["simulate", "--runs", "1"])
        .output()
        .unwrap();
    assert_eq!(bad_threads.status.code(), Some(2));
}

#[test]
fn counterexample_certificate_is_schema_valid() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("atoms.json");
    assert!(calib(&["counterexample-platt", "--out", out.to_str().unwrap()])
        .status
        .success());
    let cert = read_json(&out);
    assert_valid("platt_certificate", &cert);
    assert!(cert["certified_wce"].as_f64().unwrap() > 0.01);
}
