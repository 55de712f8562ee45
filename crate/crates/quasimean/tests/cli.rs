//! Integration tests that drive the compiled binary end to end: dataset
//! ingestion from files and stdin, both output renderings, seed resolution,
//! and the documented exit codes (0 success, 2 usage/data errors, 4 strict
//! audit failures).

use std::io::Write;
use std::process::{Command, Output, Stdio};

use quasimean::cli::SEED_ENV_VAR;
use serde_json::Value;
use tempfile::NamedTempFile;

/// The binary under test, with the seed environment scrubbed so ambient
/// configuration cannot leak into assertions.
fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_quasimean"));
    cmd.env_remove(SEED_ENV_VAR);
    cmd
}

fn data_file(contents: &str) -> NamedTempFile {
    let mut file = NamedTempFile::new().expect("temp file");
    file.write_all(contents.as_bytes()).expect("write dataset");
    file.flush().expect("flush dataset");
    file
}

fn stdout_json(output: &Output) -> Value {
    assert!(
        output.status.success(),
        "expected success, got {:?}: {}",
        output.status.code(),
        String::from_utf8_lossy(&output.stderr)
    );
    serde_json::from_slice(&output.stdout).expect("structured output is valid JSON")
}

fn stderr_text(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

#[test]
fn mean_reads_csv_file_and_reports_records() {
    let file = data_file("value\n1\n2\n3\n4\n");
    let output = bin()
        .args(["mean", "--means", "arithmetic,median"])
        .arg(file.path())
        .output()
        .unwrap();
    let doc = stdout_json(&output);

    assert_eq!(
        doc["dataset"],
        Value::String(file.path().display().to_string()),
        "dataset label defaults to the file path"
    );
    let results = doc["results"].as_array().unwrap();
    assert_eq!(results.len(), 2);
    assert_eq!(results[0]["name"], "arithmetic");
    assert_eq!(results[0]["value"], 2.5);
    assert_eq!(results[0]["internal"], true);
    assert_eq!(results[1]["name"], "median");
    assert_eq!(results[1]["value"], 2.5);
    assert_eq!(doc["config"]["seed"], 0);
}

#[test]
fn mean_reads_stdin_when_given_a_dash() {
    let mut child = bin()
        .args(["mean", "--means", "geometric", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"2\n8\n")
        .unwrap();
    let output = child.wait_with_output().unwrap();
    let doc = stdout_json(&output);

    assert_eq!(doc["dataset"], Value::Null, "stdin has no default label");
    assert_eq!(doc["results"][0]["value"], 4.0);
}

#[test]
fn explicit_label_overrides_the_file_name() {
    let file = data_file("5\n7\n");
    let output = bin()
        .args(["mean", "--means", "arithmetic", "--label", "march-batch"])
        .arg(file.path())
        .output()
        .unwrap();
    let doc = stdout_json(&output);
    assert_eq!(doc["dataset"], "march-batch");
}

#[test]
fn json_lines_input_is_supported() {
    let file = data_file("{\"value\": 1.0}\n{\"value\": 3.0}\n");
    let output = bin()
        .args([
            "mean",
            "--means",
            "quadratic",
            "--input-format",
            "json-lines",
        ])
        .arg(file.path())
        .output()
        .unwrap();
    let doc = stdout_json(&output);
    let value = doc["results"][0]["value"].as_f64().unwrap();
    assert!((value - 5f64.sqrt()).abs() <= 1e-12);
}

#[test]
fn malformed_csv_reports_the_line_and_exits_2() {
    let file = data_file("1\n2\nbanana\n4\n");
    let output = bin()
        .args(["mean", "--means", "arithmetic"])
        .arg(file.path())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let err = stderr_text(&output);
    assert!(err.starts_with("error:"), "stderr was: {err}");
    assert!(err.contains("line 3"), "stderr was: {err}");
}

#[test]
fn domain_violation_exits_2_and_names_the_mean() {
    let file = data_file("1\n-2\n3\n");
    let output = bin()
        .args(["mean", "--means", "geometric"])
        .arg(file.path())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let err = stderr_text(&output);
    assert!(err.contains("geometric"), "stderr was: {err}");
    assert!(err.contains("-2"), "stderr was: {err}");
}

#[test]
fn unknown_mean_name_exits_2() {
    let file = data_file("1\n2\n");
    let output = bin()
        .args(["mean", "--means", "midrange"])
        .arg(file.path())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_text(&output).contains("midrange"));
}

#[test]
fn weights_flag_requires_a_weight_column() {
    let file = data_file("1\n2\n3\n");
    let output = bin()
        .args(["mean", "--means", "arithmetic", "--weights"])
        .arg(file.path())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_text(&output).contains("weight"));
}

#[test]
fn weight_column_is_ignored_unless_requested() {
    // Weights sum to 4, which would be rejected if they were applied.
    let file = data_file("1,1\n2,1\n3,1\n4,1\n");
    let output = bin()
        .args(["mean", "--means", "arithmetic"])
        .arg(file.path())
        .output()
        .unwrap();
    let doc = stdout_json(&output);
    assert_eq!(doc["results"][0]["value"], 2.5);
}

#[test]
fn unnormalized_weights_are_rejected_without_the_renormalize_flag() {
    let file = data_file("1,1\n2,1\n3,1\n4,1\n");
    let output = bin()
        .args(["mean", "--means", "arithmetic", "--weights"])
        .arg(file.path())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_text(&output).contains("sum"));
}

#[test]
fn renormalize_flag_rescales_the_weight_column() {
    let file = data_file("value,weight\n10,3\n20,7\n");
    let output = bin()
        .args([
            "mean",
            "--means",
            "arithmetic",
            "--weights",
            "--renormalize-weights",
        ])
        .arg(file.path())
        .output()
        .unwrap();
    let doc = stdout_json(&output);
    assert_eq!(doc["results"][0]["value"], 17.0, "0.3*10 + 0.7*20");
}

#[test]
fn weighted_median_is_rejected() {
    let file = data_file("1,0.5\n2,0.5\n");
    let output = bin()
        .args(["mean", "--means", "median", "--weights"])
        .arg(file.path())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_text(&output).contains("median"));
}

#[test]
fn chisini_sum_matches_the_arithmetic_mean() {
    let file = data_file("1\n2\n3\n");
    let output = bin()
        .args(["chisini", "--aggregate", "sum"])
        .arg(file.path())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let doc = stdout_json(&output);
    let results = &doc["results"];
    assert_eq!(results["aggregate"], "sum");
    assert_eq!(results["status"], "unique");
    assert_eq!(results["roots"][0], 2.0);
    assert_eq!(results["internal"][0], true);
    assert_eq!(results["target"], 6.0);
    let residual = results["residuals"][0].as_f64().unwrap();
    assert!(residual.abs() <= 1e-9);
}

#[test]
fn chisini_saturated_target_serializes_as_null() {
    // exp(800) overflows f64, so the reported aggregate value is null while
    // the root itself comes from the stable path.
    let file = data_file("800\n900\n");
    let output = bin()
        .args(["chisini", "--aggregate", "sum-exp"])
        .arg(file.path())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let doc = stdout_json(&output);
    let results = &doc["results"];
    assert_eq!(results["target"], Value::Null);
    assert_eq!(results["status"], "unique");
    let root = results["roots"][0].as_f64().unwrap();
    let expected = 900.0 + ((1.0 + (-100f64).exp()) / 2.0).ln();
    assert!(
        (root - expected).abs() <= 1e-9 * expected,
        "root {root} vs {expected}"
    );
}

#[test]
fn chisini_rejects_unknown_aggregates_and_weights() {
    let file = data_file("1\n2\n");
    let output = bin()
        .args(["chisini", "--aggregate", "max"])
        .arg(file.path())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_text(&output).contains("max"));

    let weighted = data_file("1,0.5\n2,0.5\n");
    let output = bin()
        .args(["chisini", "--aggregate", "sum"])
        .arg(weighted.path())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_text(&output).contains("weight"));
}

#[test]
fn audit_passes_a_classical_mean_and_echoes_config() {
    let output = bin()
        .args(["audit", "--target", "harmonic", "--trials", "50"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let doc = stdout_json(&output);
    assert_eq!(doc["results"]["target"], "harmonic");
    assert_eq!(doc["results"]["all_pass"], true);
    assert_eq!(doc["results"]["trials"], 50);
    assert_eq!(doc["config"]["trials"], 50);
    assert_eq!(
        doc["results"]["outcomes"].as_array().unwrap().len(),
        6,
        "one outcome per axiom"
    );
    assert!(
        doc["results"].get("median_counterexample").is_none(),
        "counterexample is reported only for the median"
    );
}

#[test]
fn strict_audit_of_the_median_exits_4_with_a_witness() {
    let output = bin()
        .args(["audit", "--target", "median", "--strict"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(4));
    let doc: Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(doc["results"]["all_pass"], false);
    let outcomes = doc["results"]["outcomes"].as_array().unwrap();
    let failed: Vec<&str> = outcomes
        .iter()
        .filter(|o| o["verdict"] == "fail")
        .map(|o| o["axiom"].as_str().unwrap())
        .collect();
    assert_eq!(failed, ["associativity"]);
    let counterexample = &doc["results"]["median_counterexample"];
    assert_eq!(counterexample["sample"].as_array().unwrap().len(), 5);
    assert_eq!(counterexample["lhs"], 3.0);
    assert_eq!(counterexample["rhs"], 2.0);

    // Without --strict the same failing audit still exits 0.
    let relaxed = bin()
        .args(["audit", "--target", "median"])
        .output()
        .unwrap();
    assert_eq!(relaxed.status.code(), Some(0));
}

#[test]
fn seed_resolution_prefers_flag_over_environment() {
    let from_env = bin()
        .args(["audit", "--target", "arithmetic", "--trials", "10"])
        .env(SEED_ENV_VAR, "123")
        .output()
        .unwrap();
    assert_eq!(stdout_json(&from_env)["config"]["seed"], 123);

    let from_flag = bin()
        .args([
            "audit",
            "--target",
            "arithmetic",
            "--trials",
            "10",
            "--seed",
            "7",
        ])
        .env(SEED_ENV_VAR, "123")
        .output()
        .unwrap();
    assert_eq!(stdout_json(&from_flag)["config"]["seed"], 7);

    let unset = bin()
        .args(["audit", "--target", "arithmetic", "--trials", "10"])
        .output()
        .unwrap();
    assert_eq!(stdout_json(&unset)["config"]["seed"], 0);
}

#[test]
fn junk_seed_environment_exits_2_unless_overridden() {
    let junk = bin()
        .args(["audit", "--target", "arithmetic", "--trials", "10"])
        .env(SEED_ENV_VAR, "not-a-number")
        .output()
        .unwrap();
    assert_eq!(junk.status.code(), Some(2));
    assert!(stderr_text(&junk).contains("not-a-number"));

    // An explicit flag short-circuits the environment lookup entirely.
    let overridden = bin()
        .args([
            "audit",
            "--target",
            "arithmetic",
            "--trials",
            "10",
            "--seed",
            "1",
        ])
        .env(SEED_ENV_VAR, "not-a-number")
        .output()
        .unwrap();
    assert_eq!(overridden.status.code(), Some(0));
}

#[test]
fn table_output_renders_human_readable_lines() {
    let file = data_file("1\n2\n3\n4\n");
    let output = bin()
        .args(["mean", "--means", "arithmetic", "--format", "table"])
        .arg(file.path())
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = String::from_utf8_lossy(&output.stdout).into_owned();
    assert!(text.contains("arithmetic"), "table was: {text}");
    assert!(text.contains("2.5"), "table was: {text}");
    assert!(
        serde_json::from_str::<Value>(&text).is_err(),
        "table output should not be JSON"
    );

    let audit = bin()
        .args(["audit", "--target", "median", "--format", "table"])
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&audit.stdout).into_owned();
    assert!(text.contains("associativity"), "table was: {text}");
}

#[test]
fn empty_dataset_exits_2() {
    let file = data_file("");
    let output = bin()
        .args(["mean", "--means", "arithmetic"])
        .arg(file.path())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn missing_file_exits_2() {
    let output = bin()
        .args(["mean", "--means", "arithmetic", "/nonexistent/data.csv"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_text(&output).starts_with("error:"));
}
