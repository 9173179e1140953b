use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_adsrc");

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(format!("{name}.toml"));
    std::fs::write(&path, text).unwrap();
    path
}

fn adsrc(command: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(BIN)
        .arg(command)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

const BASE: &str = r#"
[grid]
dim = 1
n_interior = [16]

[time]
T = 1.0
n_steps = 16
"#;

fn expect_validation(name: &str, text: &str, command: &str, key: &str) -> Value {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), name, text);
    let out = adsrc(command, &cfg, tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let err = read_json(&tmp.path().join(name).join(command).join("error.json"));
    assert_eq!(err["exit_code"], 2);
    assert_eq!(err["key"], key, "{err}");
    err
}

#[test]
fn manufactured_forward_writes_trajectory_and_passes_check() {
    let tmp = tempfile::tempdir().unwrap();
    let out = adsrc("forward", &configs_dir().join("manufactured.toml"), tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("manufactured/forward");
    let manifest = read_json(&dir.join("trajectory/manifest.json"));
    assert_eq!(manifest["n_steps"], 32);
    assert_eq!(manifest["files"].as_array().unwrap().len(), 33);
    assert!(dir.join("trajectory/u_000032.csv").is_file());
    let meta = read_json(&dir.join("metadata.json"));
    assert!(meta["config"].is_object());
    assert!(meta["defaults"].is_object());
    let header = std::fs::read_to_string(dir.join("final.csv")).unwrap();
    assert!(header.starts_with("x,value\n"));
}

#[test]
fn too_few_interior_nodes_is_rejected() {
    let text = BASE.replace("n_interior = [16]", "n_interior = [1]");
    let err = expect_validation("tiny", &text, "forward", "grid.n_interior");
    assert!(err["message"].as_str().unwrap().contains("at least 2"));
}

#[test]
fn unknown_keys_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "typo", &format!("{BASE}\n[solver]\ntoll = 1e-8\n"));
    let out = adsrc("forward", &cfg, tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = read_json(&tmp.path().join("typo/forward/error.json"));
    assert!(err["message"].as_str().unwrap().contains("toll"));
}

#[test]
fn zero_source_gives_zero_trajectory() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!("{BASE}\n[source]\nshape = {{ kind = \"zero\" }}\n");
    let cfg = write_config(tmp.path(), "zero", &text);
    let out = adsrc("forward", &cfg, tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(0));
    let mut rdr = csv::Reader::from_path(tmp.path().join("zero/forward/final.csv")).unwrap();
    for rec in rdr.records() {
        let v: f64 = rec.unwrap()[1].parse().unwrap();
        assert_eq!(v, 0.0);
    }
}

#[test]
fn nonpositive_rho_rejected_when_asserted() {
    let text = format!(
        "{BASE}\n[rho]\nassert_positive = true\n[rho.profile]\nkind = \"affine\"\noffset = 0.0\nslope = 1.0\n"
    );
    expect_validation("rho_t", &text, "verify", "rho.assert_positive");
}

#[test]
fn spectral_method_on_advective_operator_is_rejected() {
    let text = format!(
        "{BASE}\n[coefficients]\nb = [{{ kind = \"constant\", value = 0.5 }}]\n[inverse]\nmethod = \"spectral\"\n"
    );
    let err = expect_validation("adv", &text, "invert", "inverse.method");
    assert!(err["message"].as_str().unwrap().contains("symmetry_flag"));
}

#[test]
fn zero_singular_value_count_is_rejected() {
    let text = format!("{BASE}\n[spectrum]\nk = 0\n");
    expect_validation("k0", &text, "spectrum", "spectrum.k");
}

#[test]
fn verify_passes_for_positive_oscillating_rho() {
    let tmp = tempfile::tempdir().unwrap();
    let out = adsrc("verify", &configs_dir().join("sinusoidal_rho.toml"), tmp.path(), &["--jobs", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("sinusoidal_rho/verify");
    let summary = read_json(&dir.join("summary.json"));
    assert_eq!(summary["pass"], true);
    for n in [2, 8, 32] {
        let rho = read_json(&dir.join(format!("lemma_rho_N{n}.json")));
        assert_eq!(rho["pass"], true);
        assert!(dir.join(format!("lemma_uhat_N{n}.csv")).is_file());
    }
    assert!(dir.join("transform_residual.csv").is_file());
    assert!(dir.join("asymptotic.json").is_file());
    assert!(!dir.join("error.json").exists());
}

#[test]
fn seed_batch_writes_one_result_per_seed_and_median() {
    let tmp = tempfile::tempdir().unwrap();
    let out = adsrc("invert", &configs_dir().join("noisy_batch.toml"), tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("noisy_batch/invert");
    for seed in 1..=5 {
        let result = read_json(&dir.join(format!("seed_{seed}/result.json")));
        assert_eq!(result["method"], "cgne");
        assert!(dir.join(format!("seed_{seed}/result_history.csv")).is_file());
    }
    let median = std::fs::read_to_string(dir.join("median.csv")).unwrap();
    let mut lines = median.lines();
    assert!(lines.next().unwrap().starts_with("noise_level,runs,median_rel_l2"));
    assert!(lines.next().unwrap().starts_with("1.0000000000000000e-2,5,"));
    let summary = read_json(&dir.join("summary.json"));
    assert_eq!(summary["runs"].as_array().unwrap().len(), 5);
}

#[test]
fn describe_prints_resolved_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let out = adsrc("invert", &configs_dir().join("manufactured.toml"), tmp.path(), &["--describe"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let parsed: toml::Value = toml::from_str(&text).unwrap();
    assert_eq!(parsed["time"]["theta"].as_float(), Some(0.5));
    assert_eq!(parsed["solver"]["restart"].as_integer(), Some(60));
    assert_eq!(parsed["inverse"]["tau"].as_float(), Some(1.1));
    assert!(!tmp.path().join("manufactured").exists());
}

#[test]
fn every_shipped_config_loads() {
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            adsrc_cli::Experiment::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        }
    }
}

#[test]
fn spectrum_reports_closed_form_columns_for_symmetric_case() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "spec", BASE);
    let out = adsrc("spectrum", &cfg, tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("spec/spectrum/singular_values.csv")).unwrap();
    assert!(csv.starts_with("index,sigma,closed_form_discrete,closed_form_continuum"));
}

#[test]
fn failing_forward_check_exits_with_verification_code() {
    let text = format!(
        "{BASE}\n[forward]\nexpected = {{ kind = \"eigenmode\", modes = [2] }}\nexpected_tol = 1e-6\n"
    );
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "wrong", &text);
    let out = adsrc("forward", &cfg, tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(4));
    let err = read_json(&tmp.path().join("wrong/forward/error.json"));
    assert_eq!(err["kind"], "verification");
}

#[test]
fn unit_rho_lower_bound_is_one_on_negative_real_axis() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "unit", BASE);
    let out = adsrc("verify", &cfg, tmp.path(), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rep = read_json(&tmp.path().join("unit/verify/lemma_rho_N8.json"));
    let on_axis: Vec<f64> = rep["samples"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|s| s["s_im"].as_f64() == Some(0.0))
        .map(|s| s["ratio"].as_f64().unwrap())
        .collect();
    assert!(!on_axis.is_empty());
    for r in on_axis {
        assert!((r - 1.0).abs() < 1e-10, "{r}");
    }
}
