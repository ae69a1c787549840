//! End-to-end binary tests: exit-code contract, output formats, sweep
//! behavior, and determinism of seeded runs.

use std::path::Path;
use std::process::{Command, Output};

fn qtotal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qtotal"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_scenario(dir: &Path, name: &str, contents: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path.display().to_string()
}

const DOUBLE_SLIT: &str = r#"{
  "state": {"builtin": "double-slit"},
  "checks": ["total-law"]
}"#;

#[test]
fn run_exits_zero_even_when_the_law_fails() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(dir.path(), "ds.scn", DOUBLE_SLIT);
    let out = qtotal(&["run", &path]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("5.00000000000e-1"), "{text}");
}

#[test]
fn unreadable_file_is_a_parse_class_error() {
    let out = qtotal(&["run", "/nonexistent/file.scn"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_json_exits_with_parse_code_and_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(dir.path(), "bad.scn", "{\"state\": [not json");
    let out = qtotal(&["run", &path]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("parse error"), "{err}");
    assert!(err.contains("line"), "{err}");
}

#[test]
fn malformed_amplitudes_name_the_offending_field() {
    let dir = tempfile::tempdir().unwrap();
    // amplitudes are not [re, im] pairs
    let path = write_scenario(
        dir.path(),
        "bad_amp.scn",
        r#"{"state": {"pure": ["oops"]}}"#,
    );
    let out = qtotal(&["run", &path]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("pure"), "{err}");
}

#[test]
fn invariant_violations_exit_with_validation_code_and_magnitude() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(
        dir.path(),
        "unnormalized.scn",
        r#"{
            "state": {"pure": [[1.0, 0.0], [1.0, 0.0]]},
            "measurements": [
                {"name": "a", "elements": "z-projectors"},
                {"name": "b", "elements": "x-projectors"}
            ]
        }"#,
    );
    let out = qtotal(&["run", &path]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("normalized"), "{err}");
}

#[test]
fn unknown_check_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(dir.path(), "ds.scn", DOUBLE_SLIT);
    let out = qtotal(&["run", &path, "--checks", "wat"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn inapplicable_check_exits_with_check_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(dir.path(), "ds.scn", DOUBLE_SLIT);
    let out = qtotal(&["run", &path, "--checks", "appendix-d"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn brukner_appendix_d_json_reports_quarter_rhs() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(
        dir.path(),
        "brukner.scn",
        r#"{"state": {"builtin": "brukner", "params": {"theta": 1.5707963267948966}}}"#,
    );
    let out = qtotal(&["run", &path, "--checks", "appendix-d", "--format", "json"]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let parsed: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let items = parsed["checks"][0]["items"].as_array().unwrap();
    let rhs = items
        .iter()
        .find(|i| i["name"] == "rhs_sum")
        .and_then(|i| i["value"].as_f64())
        .unwrap();
    assert!((rhs - 0.25).abs() < 1e-10);
}

#[test]
fn json_output_is_valid_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(dir.path(), "ds.scn", DOUBLE_SLIT);
    let out = qtotal(&["run", &path, "--format", "json"]);
    assert!(out.status.success());
    let parsed: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("stdout is valid JSON");
    assert_eq!(parsed["scenario"], "double-slit");
}

#[test]
fn csv_output_has_header_and_values() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(dir.path(), "ds.scn", DOUBLE_SLIT);
    let out = qtotal(&["run", &path, "--format", "csv"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.starts_with("check,item,label,column,value\n"));
    assert!(text.contains("1.00000000000e0"));
}

#[test]
fn list_names_five_builtins() {
    let out = qtotal(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for name in ["brukner", "bong", "stable-facts", "guerin", "double-slit"] {
        assert!(text.contains(&format!("{name}:")), "missing {name}");
    }
}

#[test]
fn sweep_accepts_builtin_names_and_file_paths() {
    let out = qtotal(&[
        "sweep",
        "brukner",
        "--param",
        "theta",
        "--range",
        "0:3.14159:3",
        "--check",
        "total-law",
        "--format",
        "csv",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(text.matches(",rhs,2.50000000000e-1").count(), 3, "{text}");

    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(dir.path(), "b.scn", r#"{"state": {"builtin": "brukner"}}"#);
    let out2 = qtotal(&[
        "sweep",
        &path,
        "--param",
        "theta",
        "--range",
        "0:1:2",
        "--check",
        "total-law",
    ]);
    assert!(out2.status.success());
}

#[test]
fn one_step_sweep_matches_run() {
    let theta = "0.9";
    let out_sweep = qtotal(&[
        "sweep",
        "brukner",
        "--param",
        "theta",
        "--range",
        &format!("{theta}:{theta}:1"),
        "--check",
        "total-law",
        "--format",
        "csv",
    ]);
    assert!(out_sweep.status.success());
    let sweep_text = String::from_utf8_lossy(&out_sweep.stdout);

    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(
        dir.path(),
        "b.scn",
        &format!(
            r#"{{"state": {{"builtin": "brukner", "params": {{"theta": {theta}}}}}, "checks": ["total-law"]}}"#
        ),
    );
    let out_run = qtotal(&["run", &path, "--format", "csv"]);
    assert!(out_run.status.success());
    let run_text = String::from_utf8_lossy(&out_run.stdout);

    // the (0,0) super outcome row of the run must carry the same numbers as
    // the single sweep row
    let grab = |text: &str, column: &str| -> String {
        text.lines()
            .find(|l| l.contains(column))
            .unwrap_or_else(|| panic!("missing {column} in\n{text}"))
            .rsplit(',')
            .next()
            .unwrap()
            .to_string()
    };
    let sweep_lhs = grab(&sweep_text, ",lhs,");
    let run_row: Vec<&str> = run_text
        .lines()
        .filter(|l| l.contains("composite total law") && l.contains("0.0,"))
        .collect();
    assert!(
        run_row.iter().any(|l| l.ends_with(&sweep_lhs)),
        "sweep lhs {sweep_lhs} not found among run rows {run_row:?}"
    );
}

#[test]
fn unknown_sweep_parameter_exits_validation() {
    let out = qtotal(&[
        "sweep",
        "double-slit",
        "--param",
        "theta",
        "--range",
        "0:1:3",
        "--check",
        "total-law",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn shipped_scenario_files_run() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    for (file, checks) in [
        ("double-slit.scn", "total-law"),
        ("brukner.scn", "appendix-d"),
        ("rabi-qubit.scn", "total-law"),
    ] {
        let path = root.join(file);
        let out = qtotal(&["run", path.to_str().unwrap(), "--checks", checks]);
        assert!(
            out.status.success(),
            "{file}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn sample_check_is_seed_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_scenario(
        dir.path(),
        "sampled.scn",
        r#"{
            "state": {"builtin": "double-slit"},
            "checks": [{"name": "sample", "n": 5000}]
        }"#,
    );
    let a = qtotal(&["run", &path, "--seed", "11", "--format", "csv"]);
    let b = qtotal(&["run", &path, "--seed", "11", "--format", "csv"]);
    let c = qtotal(&["run", &path, "--seed", "12", "--format", "csv"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}
