use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.toml"))
}

fn esm_verify(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_esm-verify")).args(args).output().expect("binary runs")
}

fn run_on(command: &str, name: &str, extra: &[&str]) -> (i32, Value) {
    let path = scenario(name);
    let mut args = vec![command, "--scenario", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    let out = esm_verify(&args);
    let report = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (out.status.code().expect("exit code"), report)
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn check<'a>(report: &'a Value, name: &str) -> &'a Value {
    report["results"]["checks"].as_array().unwrap().iter().find(|c| c["name"] == name).expect("check present")
}

#[test]
fn vacuum_validates_and_reports_its_header() {
    let (code, report) = run_on("validate", "vacuum", &[]);
    assert_eq!(code, 0);
    assert_eq!(report["status"], "pass");
    assert_eq!(report["schema_version"], "esm-verify.report/1");
    assert_eq!(report["scenario"]["name"], "vacuum");
    assert_eq!(report["scenario"]["hash"].as_str().unwrap().len(), 64);
    assert!(report["conventions"]["tolerances"]["alg_tol"].is_number());
    assert!(report.get("timings").is_none());
}

#[test]
fn non_complex_taming_fails_validation_with_its_kind() {
    let (code, report) = run_on("validate", "bad_taming", &[]);
    assert_eq!(code, 1);
    assert_eq!(report["status"], "fail");
    assert_eq!(check(&report, "taming")["error"]["kind"], "NotAlmostComplex");
}

#[test]
fn construction_errors_outside_validate_exit_with_two() {
    let path = scenario("bad_taming");
    let out = esm_verify(&["residuals", "--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("error:"));
    assert!(out.stdout.is_empty());
}

#[test]
fn identity_duality_has_zero_discrepancy() {
    let (code, report) = run_on("duality", "vacuum", &[]);
    assert_eq!(code, 0);
    let t = &report["results"]["transformations"][0];
    assert_eq!(t["name"], "identity");
    assert_eq!(t["discrepancy"].as_f64(), Some(0.0));
    assert_eq!(t["is_symmetry"], true);
}

#[test]
fn duality_without_transformations_is_an_input_error() {
    let path = scenario("torus_flux");
    let out = esm_verify(&["duality", "--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("[transformation]"));
}

#[test]
fn half_charge_fails_quantization() {
    let (code, report) = run_on("quantize", "ufold_half", &[]);
    assert_eq!(code, 1);
    assert_eq!(report["results"]["verdict"]["kind"], "NonIntegral");
}

#[test]
fn parse_errors_carry_line_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.toml");
    std::fs::write(&path, "name = \"broken\"\n\n[monodromy]\nn = \"two\"\n").unwrap();
    let out = esm_verify(&["validate", "--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("broken.toml:4:"), "{}", stderr(&out));
}

#[test]
fn unknown_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("extra.toml");
    let text = std::fs::read_to_string(scenario("vacuum")).unwrap() + "\n[extra]\nfoo = 1\n";
    std::fs::write(&path, text).unwrap();
    let out = esm_verify(&["validate", "--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_scenario_file_is_an_input_error() {
    let out = esm_verify(&["validate", "--scenario", "/nonexistent/scenario.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("cannot read"));
}

#[test]
fn tolerance_overrides_appear_in_conventions() {
    let (code, report) = run_on("residuals", "vacuum", &["--tol", "field_tol=1e-7"]);
    assert_eq!(code, 0);
    assert_eq!(report["conventions"]["tolerances"]["field_tol"].as_f64(), Some(1e-7));
    let path = scenario("vacuum");
    let out = esm_verify(&["residuals", "--scenario", path.to_str().unwrap(), "--tol", "nonsense_tol=1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn refine_dump_fields_and_timings_extend_the_report() {
    let (_, report) = run_on("residuals", "vacuum", &["--refine", "2", "--dump-fields", "--timings"]);
    let shape: Vec<u64> =
        report["results"]["grid"]["shape"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    assert_eq!(shape, [15, 15, 15, 15]);
    let fields = &report["results"]["fields"];
    assert_eq!(fields["einstein"].as_array().unwrap().len(), 16 * 15usize.pow(4));
    assert!(report["timings"].is_object());
}

#[test]
fn hash_ignores_key_order_and_formatting() {
    let original = std::fs::read_to_string(scenario("vacuum")).unwrap();
    let (header, tables) = original.split_once("\n[").unwrap();
    let (name, description) = header.trim().split_once('\n').unwrap();
    let mut reversed: Vec<String> = tables.split("\n[").map(|t| format!("[{}", t.trim())).collect();
    reversed.reverse();
    let text = format!("# comment\n{description}\n{name}\n\n{}\n", reversed.join("\n\n"));
    assert_ne!(text, original);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("vacuum.toml");
    std::fs::write(&path, text).unwrap();
    let out = esm_verify(&["holonomy", "--scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let moved: Value = serde_json::from_slice(&out.stdout).unwrap();
    let (_, report) = run_on("holonomy", "vacuum", &[]);
    assert_eq!(moved["scenario"]["hash"], report["scenario"]["hash"]);
}

#[test]
fn reruns_are_byte_identical() {
    let path = scenario("ufold");
    let args = ["quantize", "--scenario", path.to_str().unwrap()];
    let first = esm_verify(&args);
    let second = esm_verify(&args);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn report_file_and_status_line() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("report.json");
    let path = scenario("ufold");
    let out = esm_verify(&["holonomy", "--scenario", path.to_str().unwrap(), "--report", out_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    assert!(stderr(&out).contains("holonomy: pass"));
    let report: Value = serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(report["results"]["triviality"]["verdict"], "Nontrivial");
}

#[test]
fn emit_scenario_writes_the_bundled_ufold() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ufold.toml");
    let out = esm_verify(&["ufold-demo", "--emit-scenario", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(&path).unwrap(), std::fs::read_to_string(scenario("ufold")).unwrap());
}
