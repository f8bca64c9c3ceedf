use std::path::PathBuf;
use std::process::{Command, Output};

fn rml(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rml")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn bessel_table() {
    let o = rml(&["bessel", "--d", "3", "--from", "0", "--to", "2", "--points", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("x,B_d"));
    assert_eq!(lines.next(), Some("0,0.7978845608028655"));
    assert_eq!(out.lines().count(), 4);
}

#[test]
fn bessel_single_point() {
    let o = rml(&["bessel", "--d", "2", "--from", "0", "--to", "0", "--points", "1"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "x,B_d\n0,1\n");
}

#[test]
fn bessel_rejects_low_dimension() {
    let o = rml(&["bessel", "--d", "0.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("d must exceed 1"), "{}", stderr(&o));
}

#[test]
fn unknown_flag_is_a_config_error() {
    assert_eq!(rml(&["bessel", "--bogus"]).status.code(), Some(2));
}

#[test]
fn chain_range_error() {
    let o = rml(&["verify", "chain", "--d", "2", "--p", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("p must be < 2d/(d+1) = 4/3"), "{}", stderr(&o));
}

#[test]
fn critical_report() {
    let o = rml(&["verify", "critical", "--d", "2", "--lambda", "0.5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["command"], "verify critical");
    assert_eq!(v["passed"], true);
    assert_eq!(v["hash"].as_str().unwrap().len(), 64);
    assert_eq!(v["config"]["q"], "inf");
}

#[test]
fn critical_rejects_subunit_exponent() {
    let o = rml(&["verify", "critical", "--d", "3", "--lambda", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn critical_beyond_resolution() {
    let o = rml(&["verify", "critical", "--d", "2", "--lambda", "0.5", "--doublings", "4"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn zero_multiplier_kernel() {
    let cfg = scratch("zero.json");
    std::fs::write(&cfg, r#"{"multiplier":{"label":"z","kind":"zero"}}"#).unwrap();
    let o = rml(&["kernel", "--config", cfg.to_str().unwrap(), "--d", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("r,kappa,envelope_fit\n"));
    for line in out.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!((cols[1], cols[2]), ("0", "0"));
    }
}

#[test]
fn flags_override_config_file() {
    let cfg = scratch("override.json");
    std::fs::write(&cfg, r#"{"d": 3.0, "from": 1.0, "to": 1.0, "points": 1}"#).unwrap();
    let from_file = stdout(&rml(&["bessel", "--config", cfg.to_str().unwrap()]));
    let overridden = stdout(&rml(&["bessel", "--config", cfg.to_str().unwrap(), "--d", "2"]));
    let direct = stdout(&rml(&["bessel", "--d", "2", "--from", "1", "--to", "1", "--points", "1"]));
    assert_ne!(from_file, overridden);
    assert_eq!(overridden, direct);
    let bad = scratch("bad.json");
    std::fs::write(&bad, r#"{"dimension": 3}"#).unwrap();
    assert_eq!(rml(&["bessel", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn report_rerun_is_byte_identical() {
    let first = scratch("critical.json");
    let second = scratch("critical_again.json");
    let o = rml(&["verify", "critical", "--d", "3", "--lambda", "0.5", "--output", first.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let o = rml(&["verify", "critical", "--config", first.to_str().unwrap(), "--output", second.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
}
