//! End-to-end runs of the `pathpresence` binary.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_4, PI};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

use pathpresence::analytic::compensation_solution;
use pathpresence::{BeamConfig, Port};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pathpresence"))
}

fn repo_file(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn keys(v: &Value) -> Vec<String> {
    v.as_object().unwrap().keys().cloned().collect()
}

fn first_line(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

fn schemas() -> BTreeMap<String, Value> {
    serde_json::from_str(&fs::read_to_string(golden("schemas.json")).unwrap()).unwrap()
}

fn golden_keys(name: &str) -> Vec<String> {
    schemas()[name].as_array().unwrap().iter().map(|k| k.as_str().unwrap().to_string()).collect()
}

fn golden_header(name: &str) -> String {
    schemas()[name].as_str().unwrap().to_string()
}

fn dir_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn table_matches_golden_file() {
    let text = ok(&["table"]);
    let expected = fs::read_to_string(golden("table_4to1.txt")).unwrap();
    assert_eq!(text, expected);
}

#[test]
fn table_json_has_exact_entries() {
    let v: Value = serde_json::from_str(&ok(&["table", "--json"])).unwrap();
    let exact = |cell: &Value| cell["exact"].as_str().unwrap().to_string();
    let inter = &v["contexts"][0];
    let rows = inter["rows"].as_array().unwrap();
    assert_eq!(exact(&rows[0]["probability"]), "9/10");
    assert_eq!(exact(&rows[1]["probability"]), "1/10");
    assert_eq!(exact(&rows[0]["presence"][0]), "2/3");
    assert_eq!(exact(&rows[0]["presence"][1]), "1/3");
    assert_eq!(exact(&rows[1]["presence"][0]), "2");
    assert_eq!(exact(&rows[1]["presence"][1]), "-1");
    assert_eq!(exact(&inter["average"][0]), "4/5");
    assert_eq!(exact(&inter["average"][1]), "1/5");
    assert_eq!(exact(&inter["uncertainty"][0]), "2/5");
    assert_eq!(exact(&inter["variance"][1]), "4/25");
    assert_eq!(exact(&v["amplitudes"][0]), "sqrt(4/5)");
    let ww = &v["contexts"][1];
    assert_eq!(ww["context"], "whichway");
    assert_eq!(exact(&ww["rows"][0]["presence"][0]), "1");
    assert_eq!(exact(&ww["rows"][1]["presence"][0]), "0");
    assert_eq!(exact(&ww["uncertainty"][1]), "2/5");
}

#[test]
fn table_edge_cases() {
    let text = ok(&["table", "--a1", "1", "--a2", "0"]);
    assert!(text.contains("[never observed]"));
    let v: Value = serde_json::from_str(&ok(&["table", "--a1", "1", "--a2", "0", "--json"])).unwrap();
    for row in v["contexts"][0]["rows"].as_array().unwrap() {
        assert_eq!(row["presence"][0]["exact"], "1");
    }
    let text = ok(&["table", "--a1", "0.70710678", "--a2", "0.70710678"]);
    assert!(text.contains("port-   0 (0.000000000000)") && text.contains("divergent (dark port)"), "{text}");
    let out = run(&["table", "--chi", "pi/3"]);
    assert!(!out.status.success());
    let out = run(&["table", "--a1", "0.9", "--a2", "0.9"]);
    assert!(!out.status.success());
    // χ = π exchanges the ports
    let v: Value = serde_json::from_str(&ok(&["table", "--chi", "pi", "--json"])).unwrap();
    assert_eq!(v["contexts"][0]["rows"][0]["probability"]["exact"], "1/10");
}

#[test]
fn table_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["table", "--ratio", "4:1", "--out-dir", dir_str(dir.path())]);
    let manifest = read_json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["command"], "table");
    assert_eq!(manifest["outputs"], serde_json::json!(["table.txt", "table.json"]));
    assert_eq!(fs::read_to_string(dir.path().join("table.txt")).unwrap(), fs::read_to_string(golden("table_4to1.txt")).unwrap());
    let again = tempfile::tempdir().unwrap();
    let m = dir.path().join("manifest.json");
    ok(&["table", "--config", dir_str(&m), "--out-dir", dir_str(again.path())]);
    assert_eq!(fs::read(dir.path().join("table.json")).unwrap(), fs::read(again.path().join("table.json")).unwrap());
}

fn fits(dir: &Path) -> Vec<Value> {
    read_json(&dir.join("fit.json")).as_array().unwrap().clone()
}

#[test]
fn fig3a_fits_the_coupling_angle() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = repo_file("configs/fig3a.json");
    ok(&["fringe", "--config", dir_str(&cfg), "--out-dir", dir_str(dir.path())]);
    let f = fits(dir.path());
    assert_eq!(f.len(), 2);
    for (row, target) in f.iter().zip([FRAC_PI_4, 0.0]) {
        let beta0 = row["beta0"].as_f64().unwrap();
        let std = row["beta0_std"].as_f64().unwrap();
        assert!((row["theory_beta0"].as_f64().unwrap() - target).abs() < 1e-12);
        assert!((beta0 - target).abs() <= 3.0 * std, "{row}");
    }
    // simulated errors are tuned to the quoted 0.0061π and 0.0038π
    for (row, quoted) in f.iter().zip([0.0061, 0.0038]) {
        let ratio = row["beta0_std_over_pi"].as_f64().unwrap() / quoted;
        assert!((0.5..=2.0).contains(&ratio), "{ratio}");
    }
}

#[test]
fn fig4b_fits_exact_compensation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = repo_file("configs/fig4b.json");
    ok(&["fringe", "--config", dir_str(&cfg), "--out-dir", dir_str(dir.path())]);
    let beam = BeamConfig::from_intensity_ratio(4.0, 1.0, 0.0).unwrap();
    let alpha = PI / 16.0;
    for (row, port) in fits(dir.path()).iter().zip(Port::BOTH) {
        let exact = compensation_solution(port, alpha, &beam).unwrap().beta0.re;
        assert!((row["theory_beta0"].as_f64().unwrap() - exact).abs() < 1e-12);
        let beta0 = row["beta0"].as_f64().unwrap();
        let std = row["beta0_std"].as_f64().unwrap();
        assert!((beta0 - exact).abs() <= 3.0 * std, "{row}");
        assert!((row["beta0_std_over_pi"].as_f64().unwrap() / 0.0054 - 1.0).abs() < 0.5);
    }
}

#[test]
fn manifest_reproduces_outputs_bit_exactly() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    let cfg = repo_file("configs/fig4a.json");
    ok(&["fringe", "--config", dir_str(&cfg), "--seed", "99", "--out-dir", dir_str(first.path())]);
    let manifest = first.path().join("manifest.json");
    let m = read_json(&manifest);
    assert_eq!(m["seed"], 99);
    assert_eq!(m["command"], "fringe");
    assert_eq!(m["tool_version"], env!("CARGO_PKG_VERSION"));
    ok(&["fringe", "--config", dir_str(&manifest), "--out-dir", dir_str(second.path())]);
    let mut names: Vec<String> = m["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap().to_string()).collect();
    names.push("manifest.json".into());
    assert_eq!(names.len(), fs::read_dir(first.path()).unwrap().count());
    for name in names {
        let a = fs::read(first.path().join(&name)).unwrap();
        let b = fs::read(second.path().join(&name)).unwrap();
        assert!(a == b, "{name} differs");
    }
    // a different seed changes the counts
    let third = tempfile::tempdir().unwrap();
    ok(&["fringe", "--config", dir_str(&cfg), "--seed", "100", "--out-dir", dir_str(third.path())]);
    assert_ne!(fs::read(first.path().join("port-plus.csv")).unwrap(), fs::read(third.path().join("port-plus.csv")).unwrap());
}

#[test]
fn manifest_for_another_command_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["ozawa", "--out-dir", dir_str(dir.path())]);
    let m = dir.path().join("manifest.json");
    let out = run(&["fringe", "--config", dir_str(&m), "--out-dir", dir_str(dir.path())]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("manifest for 'ozawa'"));
}

#[test]
fn zero_shots_is_a_schema_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = repo_file("configs/fig3a.json");
    let out = run(&["fringe", "--config", dir_str(&cfg), "--shots", "0", "--out-dir", dir_str(dir.path())]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("schema error"));

    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\n  \"alpha\": \"pi/4\",\n  \"shots_per_setting\": 0,\n  \"runs\": []\n}\n").unwrap();
    let out = run(&["fringe", "--config", dir_str(&bad), "--out-dir", dir_str(dir.path())]);
    let err = String::from_utf8_lossy(&out.stderr).to_string();
    assert!(!out.status.success());
    assert!(err.contains("schema error") && err.contains("line 3"), "{err}");

    fs::write(&bad, "{\n  \"alpha\": \"pi/4\",\n  \"shots\": 5,\n  \"runs\": []\n}\n").unwrap();
    let err = String::from_utf8_lossy(&run(&["fringe", "--config", dir_str(&bad)]).stderr).to_string();
    assert!(err.contains("unknown field `shots`") && err.contains("line 3"), "{err}");
}

#[test]
fn shots_override_applies_to_every_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = repo_file("configs/fig4a.json");
    ok(&["fringe", "--config", dir_str(&cfg), "--shots", "50", "--out-dir", dir_str(dir.path())]);
    for row in fits(dir.path()) {
        assert_eq!(row["shots_per_setting"], 50);
    }
}

#[test]
fn presence_scan_rows_and_theory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = repo_file("configs/scan.json");
    ok(&["presence-scan", "--config", dir_str(&cfg), "--shots", "2000", "--out-dir", dir_str(dir.path())]);
    let rows = read_json(&dir.path().join("presence_scan.json"));
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 3 * 2);
    let at = |outcome: &str| {
        rows.iter()
            .find(|r| r["outcome"] == outcome && (r["alpha"].as_f64().unwrap() - FRAC_PI_4).abs() < 1e-15)
            .unwrap()["theory_exact"]
            .as_f64()
            .unwrap()
    };
    assert!((at("port+") - 0.6686).abs() < 1e-4);
    assert!((at("port-") - 1.8701).abs() < 1e-4);
    let csv = fs::read_to_string(dir.path().join("presence_scan.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 6);
}

#[test]
fn presence_scan_rejects_zero_coupling() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scan.json");
    fs::write(&cfg, r#"{"alphas": ["0"], "shots_per_setting": 100}"#).unwrap();
    let out = run(&["presence-scan", "--config", dir_str(&cfg), "--out-dir", dir_str(&dir.path().join("o"))]);
    assert!(!out.status.success());
    assert!(!dir.path().join("o").exists());
}

#[test]
fn ozawa_landscape() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = repo_file("configs/ozawa.json");
    ok(&["ozawa", "--config", dir_str(&cfg), "--out-dir", dir_str(dir.path())]);
    let s = read_json(&dir.path().join("ozawa_summary.json"));
    let step = s["grid_step"].as_f64().unwrap();
    assert!((s["minimum"]["est_plus"].as_f64().unwrap() - 2.0 / 3.0).abs() <= step);
    assert!((s["minimum"]["est_minus"].as_f64().unwrap() - 2.0).abs() <= step);
    assert!(s["eps2_at_weak_values"].as_f64().unwrap().abs() < 1e-12);
    let c = &s["common_estimate"];
    assert!((c["grid_est"].as_f64().unwrap() - 0.8).abs() < 1e-12);
    assert!((c["grid_eps2"].as_f64().unwrap() - 0.16).abs() < 1e-12);
    let lines = fs::read_to_string(dir.path().join("ozawa_grid.csv")).unwrap().lines().count();
    assert_eq!(lines, 1 + 201 * 201);

    let sym = tempfile::tempdir().unwrap();
    let cfg = repo_file("configs/ozawa_symmetric.json");
    let text = ok(&["ozawa", "--config", dir_str(&cfg), "--out-dir", dir_str(sym.path())]);
    assert!(text.contains("divergent (dark port)"));
    let s = read_json(&sym.path().join("ozawa_summary.json"));
    assert_eq!(s["weak_values"][1]["status"], "divergent (dark port)");
    assert!(s["weak_values"][1]["value"].is_null());
}

#[test]
fn verify_is_deterministic_and_fails_loudly() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = |d: &Path| vec!["verify".to_string(), "--seed".into(), "7".into(), "--only".into(), "1,2,4,7,9".into(), "--out-dir".into(), dir_str(d).to_string()];
    let out_a = bin().args(args(a.path())).output().unwrap();
    let out_b = bin().args(args(b.path())).output().unwrap();
    assert!(out_a.status.success() && out_b.status.success());
    let text = String::from_utf8(out_a.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 5);
    assert_eq!(fs::read(a.path().join("verify.json")).unwrap(), fs::read(b.path().join("verify.json")).unwrap());
    assert_eq!(read_json(&a.path().join("manifest.json"))["seed"], 7);

    let out = run(&["verify", "--only", "2", "--tolerance", "presence_minus=1e-6", "--json"]);
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["passed"], false);
    let failed: Vec<_> = report["criteria"][0]["measurements"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|m| m["ok"] == false)
        .map(|m| m["name"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(failed, vec!["beta0-/alpha"]);

    let out = run(&["verify", "--tolerance", "bogus=1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn output_schemas_are_stable() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["fringe", "--config", dir_str(&repo_file("configs/fig4a.json")), "--shots", "200", "--out-dir", dir_str(&d.join("f"))]);
    ok(&["presence-scan", "--shots", "200", "--out-dir", dir_str(&d.join("s"))]);
    ok(&["ozawa", "--out-dir", dir_str(&d.join("o"))]);
    ok(&["verify", "--only", "1", "--out-dir", dir_str(&d.join("v"))]);

    assert_eq!(first_line(&d.join("f/port-plus.csv")), golden_header("dataset_csv"));
    assert_eq!(first_line(&d.join("f/overlay.csv")), golden_header("overlay_csv"));
    assert_eq!(first_line(&d.join("s/presence_scan.csv")), golden_header("presence_scan_csv"));
    assert_eq!(first_line(&d.join("o/ozawa_grid.csv")), golden_header("ozawa_grid_csv"));

    let fit = read_json(&d.join("f/fit.json"));
    assert_eq!(keys(&fit[0]), golden_keys("fit_json"));
    let data = read_json(&d.join("f/port-plus.json"));
    assert_eq!(keys(&data), golden_keys("dataset_json"));
    assert_eq!(keys(&data["config"]), golden_keys("dataset_json_config"));
    assert_eq!(keys(&data["settings"][0]), golden_keys("dataset_json_setting"));
    assert_eq!(keys(&read_json(&d.join("s/presence_scan.json"))[0]), golden_keys("presence_scan_json"));
    assert_eq!(keys(&read_json(&d.join("o/ozawa_summary.json"))), golden_keys("ozawa_summary_json"));
    for sub in ["f", "s", "o", "v"] {
        assert_eq!(keys(&read_json(&d.join(sub).join("manifest.json"))), golden_keys("manifest_json"));
    }
    let v = read_json(&d.join("v/verify.json"));
    assert_eq!(keys(&v), golden_keys("verify_json"));
    assert_eq!(keys(&v["criteria"][0]), golden_keys("verify_json_criterion"));
    assert_eq!(keys(&v["criteria"][0]["measurements"][0]), golden_keys("verify_json_measurement"));
}
