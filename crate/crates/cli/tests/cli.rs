use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ultrajet"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ultrajet-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str], out: &Path) -> (Output, Value) {
    let output = bin().args(args).arg("--out").arg(out).output().unwrap();
    let text = std::fs::read_to_string(out.join("report.json")).unwrap();
    (output, serde_json::from_str(&text).unwrap())
}

fn verdict<'a>(report: &'a Value, name: &str) -> &'a Value {
    report["verdicts"].as_array().unwrap().iter().find(|v| v["name"] == name).unwrap()
}

#[test]
fn power_weight_is_its_own_heir() {
    let out = scratch("power");
    let cfg = config("power_self_heir.toml");
    let (o, r) = run(&["check", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(verdict(&r, "heir")["holds"], true);
    assert!(verdict(&r, "heir")["detail"]["witness_constants"]["C"].is_number());
    for key in
        ["schema_version", "config_echo", "verdicts", "certificates", "residual_tables", "cube_stats", "warnings"]
    {
        assert!(r.get(key).is_some(), "missing {key}");
    }
    // defaults are materialized, sigma included
    assert_eq!(r["config_echo"]["sigma"], r["config_echo"]["weight"]);
    assert_eq!(r["config_echo"]["jet"]["a_max"], 8192);
}

#[test]
fn log_power_weight_is_not_its_own_heir() {
    let out = scratch("logpower");
    let cfg = config("log_power_heir.toml");
    let (o, r) = run(&["check", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(1));
    let v = verdict(&r, "heir");
    assert_eq!(v["holds"], false);
    assert!(v["detail"]["counterexample"]["at"]["t"].as_f64().unwrap() > 1.0);
    assert_eq!(r["passed"], false);
}

#[test]
fn sin_fixture_passes_with_decreasing_residuals() {
    let out = scratch("sin");
    let cfg = config("sin_gevrey2.toml");
    let (o, r) = run(&["all", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(r["errors"].as_array().unwrap().is_empty());

    let text = std::fs::read_to_string(out.join("residuals.csv")).unwrap();
    assert!(!text.contains('\r'));
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(rdr.headers().unwrap(), vec!["point", "alpha", "d", "residual", "samples"]);
    let mut curves: std::collections::BTreeMap<(String, String), Vec<(f64, f64)>> = Default::default();
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let d: f64 = rec[2].parse().unwrap();
        let res: f64 = rec[3].parse().unwrap();
        curves.entry((rec[0].to_string(), rec[1].to_string())).or_default().push((d, res));
    }
    assert_eq!(curves.len(), 10);
    for (key, mut c) in curves {
        c.sort_by(|a, b| b.0.total_cmp(&a.0));
        assert!(c.windows(2).all(|w| w[1].1 < w[0].1), "{key:?}: {c:?}");
    }
    for name in ["seq.csv", "fn_curves.csv", "matrix.csv", "cubes.csv", "pou_sum.csv", "extension.csv"] {
        assert!(out.join(name).exists(), "{name}");
    }
}

#[test]
fn reports_are_byte_identical_across_worker_counts() {
    let cfg = config("sin_gevrey2.toml");
    let a = scratch("w1");
    let b = scratch("w4");
    for (dir, workers) in [(&a, "1"), (&b, "4")] {
        let (o, _) = run(&["verify", "--config", cfg.to_str().unwrap(), "--workers", workers], dir);
        assert!(o.status.success());
    }
    let one = std::fs::read_to_string(a.join("report.json")).unwrap();
    let four = std::fs::read_to_string(b.join("report.json")).unwrap();
    assert_eq!(one, four);
    assert_eq!(std::fs::read(a.join("residuals.csv")).unwrap(), std::fs::read(b.join("residuals.csv")).unwrap());
}

#[test]
fn floats_carry_17_significant_digits() {
    let out = scratch("digits");
    let cfg = config("power_self_heir.toml");
    run(&["check", "--config", cfg.to_str().unwrap()], &out);
    let text = std::fs::read_to_string(out.join("report.json")).unwrap();
    let c = text.lines().find(|l| l.trim_start().starts_with("\"C\":")).unwrap();
    let mantissa = c.split(':').nth(1).unwrap().trim().trim_end_matches(',').split('e').next().unwrap();
    assert_eq!(mantissa.chars().filter(char::is_ascii_digit).count(), 17, "{c}");
}

#[test]
fn unknown_key_is_a_config_error() {
    let out = scratch("badkey");
    let cfg = out.join("bad.toml");
    std::fs::write(&cfg, "schema_version = 1\n[pou]\norder_cap = 4\nstages = 3\n").unwrap();
    let (o, r) = run(&["check", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
    let e = &r["errors"][0];
    assert_eq!(e["kind"], "config");
    assert!(e["message"].as_str().unwrap().contains("stages"));
}

#[test]
fn wrong_schema_version_is_a_config_error() {
    let out = scratch("schema");
    let cfg = out.join("v2.toml");
    std::fs::write(&cfg, "schema_version = 2\n").unwrap();
    let (o, _) = run(&["seq", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn strict_turns_warnings_into_failures() {
    let out = scratch("strict");
    let cfg = out.join("capped.toml");
    // a 40-term jet is too short for the degrees near E, so cubes get capped
    std::fs::write(&cfg, "schema_version = 1\n[jet]\na_max = 40\ncert_order = 20\n[cubes]\ndepth = 10\n").unwrap();
    let (o, r) = run(&["extend", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0));
    assert!(!r["warnings"].as_array().unwrap().is_empty());
    let (o, r) = run(&["extend", "--config", cfg.to_str().unwrap(), "--strict"], &out);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(r["passed"], false);
}

#[test]
fn seed_flag_is_echoed() {
    let out = scratch("seed");
    let cfg = config("power_self_heir.toml");
    let (_, r) = run(&["check", "--config", cfg.to_str().unwrap(), "--seed", "99"], &out);
    assert_eq!(r["config_echo"]["seed"], 99);
}
