use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn magspec(sub: &str, config: &str, out: &Path, extra: &[&str]) -> Output {
    let cfg = out.with_extension("json");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_magspec"))
        .arg(sub)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(out)
        .args(extra)
        .env_remove("MAGSPEC_THREADS")
        .output()
        .unwrap()
}

fn report(out: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap()
}

const GAUGE: &str = r#"{
  "subcommand": "gauge-check",
  "seed": 7,
  "params": {
    "vector_potential": {"type": "rotational_even", "dim": 4, "sigma": {"type": "power", "exponent": 1.0}},
    "n_points": 20
  }
}"#;

#[test]
fn gauge_check_passes_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let out = magspec("gauge-check", GAUGE, &a, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&a);
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["checks"][0]["pass"], true);
    let out = magspec("gauge-check", GAUGE, &b, &["--threads", "2"]);
    assert_eq!(out.status.code(), Some(0));
    for f in ["report.json", "intensities.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn seed_flag_changes_points() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    magspec("gauge-check", GAUGE, &a, &[]);
    magspec("gauge-check", GAUGE, &b, &["--seed", "8"]);
    assert_eq!(report(&b)["seed"], 8);
    assert_ne!(std::fs::read(a.join("intensities.csv")).unwrap(), std::fs::read(b.join("intensities.csv")).unwrap());
}

#[test]
fn malformed_json_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = magspec("gauge-check", r#"{"params": {"vector_potential": "#, &dir.path().join("o"), &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config error"));
}

#[test]
fn bad_field_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"params": {"c": -0.1, "lengths": [10.0, 100.0], "expect": "bounded", "per_unit": "dense"}}"#;
    let out = magspec("oned-hardy", cfg, &dir.path().join("o"), &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("params.per_unit"), "{err}");
    assert!(report(&dir.path().join("o"))["error"].as_str().unwrap().contains("params.per_unit"));
}

#[test]
fn non_monotone_ladder_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"params": {"c": -0.1, "lengths": [100.0, 10.0, 1000.0], "expect": "bounded"}}"#;
    assert_eq!(magspec("oned-hardy", cfg, &dir.path().join("o"), &[]).status.code(), Some(2));
}

#[test]
fn invalid_thread_env_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("g.json");
    std::fs::write(&cfg, GAUGE).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_magspec"))
        .args(["gauge-check", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("o"))
        .env("MAGSPEC_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn landau_resolution_warning_does_not_stop_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().join("o");
    let cfg = r#"{"params": {"b": 1.0, "runs": [[12.0, 20]]}}"#;
    let out = magspec("landau", cfg, &o, &[]);
    let code = out.status.code().unwrap();
    assert!(code == 0 || code == 1, "{code}");
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    let r = report(&o);
    assert!(!r["warnings"].as_array().unwrap().is_empty());
    assert!(o.join("warnings.csv").exists() && o.join("landau.csv").exists());
}

#[test]
fn hardy_subcritical_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"subcommand": "oned-hardy", "params": {"c": -0.1, "lengths": [100.0, 1000.0, 10000.0], "expect": "bounded"}}"#;
    let out = magspec("oned-hardy", cfg, &dir.path().join("o"), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}
