use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qlv::icdf::IcdfApprox;
use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn qlv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qlv")).args(args).output().unwrap()
}

fn run_ok(args: &[&str]) -> Value {
    let out = qlv(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn cfg(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

fn write_cfg(dir: &Path, body: &Value) -> String {
    let p = dir.join("run.json");
    std::fs::write(&p, serde_json::to_string(body).unwrap()).unwrap();
    p.to_string_lossy().into_owned()
}

fn bs_call(s0: f64, k: f64, sigma: f64, t: f64) -> f64 {
    let n = |x: f64| 0.5 * libm::erfc(-x / std::f64::consts::SQRT_2);
    let sd = sigma * t.sqrt();
    let d1 = ((s0 / k).ln() + 0.5 * sd * sd) / sd;
    s0 * n(d1) - k * n(d1 - sd)
}

#[test]
fn classical_black_scholes_price() {
    let v = run_ok(&["price-classical", "--config", &cfg("bs_call.json")]);
    assert_eq!(v["command"], "price-classical");
    let r = &v["result"];
    let (p, se) = (r["price"].as_f64().unwrap(), r["std_error"].as_f64().unwrap());
    assert!((p - bs_call(1.0, 1.0, 0.2, 1.0)).abs() < 3.0 * se + 2e-3, "{p} ± {se}");
}

#[test]
fn classical_is_deterministic_and_offset_moves_it() {
    let a = run_ok(&["price-classical", "--config", &cfg("bs_call.json")]);
    let b = run_ok(&["price-classical", "--config", &cfg("bs_call.json")]);
    assert_eq!(a, b);
    let c = run_ok(&["price-classical", "--config", &cfg("bs_call.json"), "--seed-offset", "7"]);
    assert_ne!(a["result"]["price"], c["result"]["price"]);
    assert_eq!(c["options"]["seed_offset"], 7);
    let d = run_ok(&["price-classical", "--config", &cfg("bs_call.json"), "--seed-offset", "-7"]);
    assert_ne!(a["result"]["price"], d["result"]["price"]);
}

#[test]
fn prn_desk_simulation_is_bit_exact() {
    let v = run_ok(&["simulate", "--config", &cfg("prn_desk.json")]);
    let r = &v["result"];
    assert_eq!(r["way"], "prn");
    assert_eq!(r["bit_exact"], true);
    assert!((r["price"].as_f64().unwrap() - r["classical_price"].as_f64().unwrap()).abs() < 1e-12);
}

#[test]
fn rn_desk_simulation_matches_enumeration() {
    let v = run_ok(&["simulate", "--config", &cfg("rn_desk.json")]);
    let r = &v["result"];
    assert_eq!(r["way"], "rn");
    assert!(r["abs_diff"].as_f64().unwrap() < 1e-9);
}

#[test]
fn zero_payoff_prices_to_zero() {
    let dir = tempfile::tempdir().unwrap();
    let mut body: Value = serde_json::from_str(&std::fs::read_to_string(cfg("prn_desk.json")).unwrap()).unwrap();
    body["payoff"] = serde_json::json!({ "kind": "zero" });
    let path = write_cfg(dir.path(), &body);
    let v = run_ok(&["simulate", "--config", &path]);
    assert_eq!(v["result"]["price"].as_f64().unwrap(), 0.0);
    let v = run_ok(&["price-classical", "--config", &path]);
    assert_eq!(v["result"]["price"].as_f64().unwrap(), 0.0);
}

#[test]
fn csv_output_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("price.csv");
    let o = qlv(&["price-classical", "--config", &cfg("bs_call.json"), "--format", "csv", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("key,value\n"));
    assert!(text.lines().any(|l| l.starts_with("result.price,")));
}

#[test]
fn resources_defaults() {
    let o = qlv(&["resources"]);
    assert!(o.status.success());
    assert!(!o.stderr.is_empty());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let r = &v["result"];
    assert_eq!(r["prn"]["qubits"]["total"], 240);
    assert_eq!(r["prn"]["t_count"]["total"], 373_847_040u64);
    assert_eq!(r["rn"]["qubits"]["total"], 915_840);
    assert_eq!(r["rn"]["t_count"]["total"], 212_774_400u64);
    assert_eq!(r["prn_t_larger"], true);
}

#[test]
fn resources_flags_change_counts() {
    let a = run_ok(&["resources", "--n-t", "10"]);
    let b = run_ok(&["resources", "--n-t", "20"]);
    assert_eq!(a["result"]["prn"]["qubits"], b["result"]["prn"]["qubits"]);
    assert_ne!(a["result"]["rn"]["qubits"], b["result"]["rn"]["qubits"]);
}

#[test]
fn fit_icdf_artifact_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("icdf.json");
    let o = qlv(&["fit-icdf", "--target-err", "1e-4", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let approx = IcdfApprox::from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!(approx.n_intervals() >= 1);
    assert!(approx.max_err <= 1e-4);
}

#[test]
fn validate_passes_and_fails() {
    assert!(qlv(&["validate", "--config", &cfg("prn_desk.json")]).status.success());
    let o = qlv(&["validate", "--config", &cfg("non_monotone.json")]);
    assert_eq!(o.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["result"]["passed"], false);
    let failed: Vec<&str> = v["result"]["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(failed.contains(&"monotonicity"), "{failed:?}");
}

#[test]
fn errors_exit_two_with_json() {
    let o = qlv(&["simulate"]);
    assert_eq!(o.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert!(v["error"]["message"].as_str().unwrap().contains("--config"));

    let dir = tempfile::tempdir().unwrap();
    let path = write_cfg(dir.path(), &serde_json::json!({ "model": {}, "surprise": 1 }));
    let o = qlv(&["price-classical", "--config", &path]);
    assert_eq!(o.status.code(), Some(2));
    assert!(serde_json::from_slice::<Value>(&o.stderr).unwrap()["error"]["kind"].is_string());
}

#[test]
fn classical_way_cannot_be_simulated() {
    assert_eq!(qlv(&["simulate", "--config", &cfg("bs_call.json")]).status.code(), Some(2));
}
