//! Command-level behavior: config parsing and overrides, exit codes,
//! file round-trips, and the documented examples of each subcommand.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kamtori"))
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

const BASE_CONFIG: &str = r#"
sigma = 2.5
gamma = 1e-3
eps = 1e-10
window = 1
steps = 1
backend = "float64"
freeze = false
seed = 7

[omega]
source = "sampled"
"#;

#[test]
fn build_window_one_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    write(&cfg, BASE_CONFIG);
    let ham = dir.path().join("ham.json");
    let out = bin()
        .args(["build", "-c", cfg.to_str().unwrap(), "-o", ham.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    // 141 ordered sextuples merge into 16 sextic keys; 3 quadratic terms.
    assert!(stderr.contains("141 sextuples"), "stderr: {stderr}");
    assert!(stderr.contains("16 sextic + 3 quadratic"), "stderr: {stderr}");

    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&ham).unwrap()).unwrap();
    assert_eq!(doc["terms"].as_array().unwrap().len(), 19);
    assert_eq!(doc["backend"], "float64");
}

#[test]
fn build_zero_eps_quadratic_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    write(&cfg, BASE_CONFIG);
    let ham = dir.path().join("quad.json");
    let out = bin()
        .args([
            "build",
            "-c",
            cfg.to_str().unwrap(),
            "--eps",
            "0.0",
            "-o",
            ham.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    // eps = 0 is outside (0,1); the config layer rejects it.
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    write(&cfg, "sigma = \"nope\"");
    let out = bin()
        .args(["run", "-c", cfg.to_str().unwrap()])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    write(&cfg, "sigma = 1.5"); // sigma must exceed 2
    let out = bin()
        .args(["run", "-c", cfg.to_str().unwrap()])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    write(&cfg, BASE_CONFIG);
    let ham = dir.path().join("w2.json");
    let out = bin()
        .args([
            "build",
            "-c",
            cfg.to_str().unwrap(),
            "--window",
            "2",
            "-o",
            ham.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&ham).unwrap()).unwrap();
    assert_eq!(doc["window"], 2);
}

#[test]
fn bracket_of_file_with_itself_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    write(&cfg, BASE_CONFIG);
    let ham = dir.path().join("h.json");
    assert!(bin()
        .args(["build", "-c", cfg.to_str().unwrap(), "-o", ham.to_str().unwrap()])
        .status()
        .unwrap()
        .success());
    let out = dir.path().join("zero.json");
    assert!(bin()
        .args([
            "bracket",
            ham.to_str().unwrap(),
            ham.to_str().unwrap(),
            "-o",
            out.to_str().unwrap(),
        ])
        .status()
        .unwrap()
        .success());
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(doc["terms"].as_array().unwrap().len(), 0);

    // Norm of the zero Hamiltonian is 0.
    let norm_out = bin()
        .args(["norm", out.to_str().unwrap(), "--rho", "0.1"])
        .output()
        .unwrap();
    assert!(norm_out.status.success());
    let line: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&norm_out.stdout).trim()).unwrap();
    assert_eq!(line["norm"], 0.0);
}

#[test]
fn norm_matches_single_monomial_example() {
    // H = q_1 q̄_1 q_2 q̄_2 at c = e, sigma = 3, rho = 0.1 has norm e^{-0.2}.
    let dir = tempfile::tempdir().unwrap();
    let ham = dir.path().join("single.json");
    write(
        &ham,
        r#"{
  "schema": "kamtori-hamiltonian-v1",
  "sigma": 3.0,
  "c_effective": 2.718281828459045,
  "window": 2,
  "backend": "float64",
  "terms": [
    {"a": {}, "k": {"1": 1, "2": 1}, "kp": {"1": 1, "2": 1}, "re": 1.0, "im": 0.0}
  ]
}"#,
    );
    let out = bin()
        .args(["norm", ham.to_str().unwrap(), "--rho", "0.1"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let line: serde_json::Value =
        serde_json::from_str(String::from_utf8_lossy(&out.stdout).trim()).unwrap();
    let norm = line["norm"].as_f64().unwrap();
    assert!((norm - (-0.2f64).exp()).abs() < 1e-12);
}

#[test]
fn run_s0_reports_initial_norms_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    write(&cfg, BASE_CONFIG);
    let report = dir.path().join("report.jsonl");
    let out = bin()
        .args([
            "run",
            "-c",
            cfg.to_str().unwrap(),
            "--steps",
            "0",
            "-o",
            report.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = std::fs::read_to_string(&report).unwrap();
    assert!(text.contains("\"record\":\"init\""));
    assert!(!text.contains("\"record\":\"step\""));
}

#[test]
fn dioph_verify_and_measure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    write(&cfg, BASE_CONFIG);
    let out_path = dir.path().join("d.jsonl");
    let out = bin()
        .args([
            "dioph",
            "-c",
            cfg.to_str().unwrap(),
            "--height",
            "1",
            "-o",
            out_path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = bin()
        .args([
            "dioph",
            "-c",
            cfg.to_str().unwrap(),
            "--measure",
            "--samples",
            "200",
            "--height",
            "1",
            "-o",
            out_path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(text.lines().count(), 3); // one measure record per gamma
}

#[test]
fn lemmas_selected_suite_strict() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    write(&cfg, BASE_CONFIG);
    let out_path = dir.path().join("v.jsonl");
    let out = bin()
        .args([
            "lemmas",
            "-c",
            cfg.to_str().unwrap(),
            "--suite",
            "log_superadditivity",
            "--trials",
            "500",
            "--strict",
            "-o",
            out_path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(text.lines().count(), 3); // one verdict per sigma

    let out = bin()
        .args(["lemmas", "-c", cfg.to_str().unwrap(), "--suite", "bogus"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn hamiltonian_file_round_trip_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    write(&cfg, BASE_CONFIG);
    let ham = dir.path().join("h.json");
    assert!(bin()
        .args(["build", "-c", cfg.to_str().unwrap(), "-o", ham.to_str().unwrap()])
        .status()
        .unwrap()
        .success());
    let first = std::fs::read(&ham).unwrap();
    // Rebuilding with the identical config reproduces the bytes.
    assert!(bin()
        .args(["build", "-c", cfg.to_str().unwrap(), "-o", ham.to_str().unwrap()])
        .status()
        .unwrap()
        .success());
    assert_eq!(first, std::fs::read(&ham).unwrap());
}

#[test]
fn rational_backend_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    write(&cfg, BASE_CONFIG);
    let ham = dir.path().join("rat.json");
    let out = bin()
        .args([
            "build",
            "-c",
            cfg.to_str().unwrap(),
            "--backend",
            "rational",
            "-o",
            ham.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = std::fs::read_to_string(&ham).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["backend"], "rational");
    // Coefficients are num/den strings.
    let re = doc["terms"][0]["re"].as_str().unwrap();
    assert!(re.contains('/'));
}
