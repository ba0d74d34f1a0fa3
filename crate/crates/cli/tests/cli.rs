use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn pcnc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcnc")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const SMALL: &str = r#"{"L": 6, "M": 2, "K": 3, "N": 2, "trials": 2,
  "sweep": {"axis": "D", "values": [0, 150], "modes": ["FC", "FNC", "PCNC"]}}"#;

#[test]
fn solve_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.json", SMALL);
    for format in ["json", "csv"] {
        let a = pcnc(&["solve", "--config", &cfg, "--seed", "7", "--format", format]);
        let b = pcnc(&["solve", "--config", &cfg, "--seed", "7", "--format", format]);
        assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
        assert!(!a.stdout.is_empty());
        assert_eq!(a.stdout, b.stdout);
    }
    let other = pcnc(&["solve", "--config", &cfg, "--seed", "8"]);
    let base = pcnc(&["solve", "--config", &cfg, "--seed", "7"]);
    assert_ne!(other.stdout, base.stdout);
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.json", SMALL);
    let out = dir.path().join("r.csv");
    let res = pcnc(&["solve", "--config", &cfg, "--format", "csv", "--out", out.to_str().unwrap()]);
    assert!(res.status.success());
    assert!(res.stdout.is_empty());
    let text = fs::read_to_string(out).unwrap();
    assert!(text.starts_with("trial,k,c,rate\n"));
    assert!(text.lines().count() > 3);
}

#[test]
fn sweep_csv_has_one_row_per_point_and_mode() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.json", SMALL);
    let res = pcnc(&["sweep", "--config", &cfg]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = String::from_utf8(res.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("axis_value,mode,mean_sum_rate,stderr,trials"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 6);
    for r in rows {
        assert_eq!(r.split(',').count(), 5);
        assert!(r.ends_with(",2"));
    }
}

#[test]
fn sweep_without_spec_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.json", r#"{"L": 4, "M": 2, "K": 2, "N": 2}"#);
    let res = pcnc(&["sweep", "--config", &cfg]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn example_has_five_strategies_per_power() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig1.csv");
    let res = pcnc(&["example", "--trials", "3", "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let text = fs::read_to_string(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "rho_db,strategy,rate");
    assert_eq!(lines.len(), 1 + 5 * 7);
}

#[test]
fn malformed_config_exits_2_with_field() {
    let dir = tempfile::tempdir().unwrap();
    for (body, field) in [
        (r#"{"L": 3, "M": 2, "K": 1, "N": 2, "bogus": 1}"#, "bogus"),
        (r#"{"L": 3, "M": 2, "K": 1, "N": 2, "tx_power": -2}"#, "tx_power"),
        (r#"{"M": 2, "K": 1, "N": 2}"#, "L"),
    ] {
        let cfg = write(dir.path(), "bad.json", body);
        let res = pcnc(&["solve", "--config", &cfg]);
        assert_eq!(res.status.code(), Some(2));
        let err: serde_json::Value = serde_json::from_slice(&res.stderr).unwrap();
        assert_eq!(err["error"]["kind"], "invalid_config");
        assert_eq!(err["error"]["field"], field);
    }
}

#[test]
fn numerical_abort_exits_3_with_trial() {
    // A coarse power bracket with no slack for objective increases.
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "s.json",
        r#"{"L": 4, "M": 2, "K": 2, "N": 2, "solver": {"monotone_tol": 1e-300, "bisect_eps": 1e8}}"#,
    );
    let res = pcnc(&["solve", "--config", &cfg, "--trial", "4"]);
    assert_eq!(res.status.code(), Some(3), "{}", String::from_utf8_lossy(&res.stderr));
    let err: serde_json::Value = serde_json::from_slice(&res.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "numerical");
    assert_eq!(err["error"]["trial"], 4);

    let run = pcnc(&["run", "--config", &cfg, "--trials", "2", "--format", "csv"]);
    assert_eq!(run.status.code(), Some(3));
    let err: serde_json::Value = serde_json::from_slice(&run.stderr).unwrap();
    assert!(err["error"]["trial"].is_u64());
}
