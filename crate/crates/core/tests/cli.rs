use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn ierk(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ierk"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn summary(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

fn assert_outputs(dir: &Path) {
    for f in ["table.csv", "trace.csv", "report.json", "plot.svg"] {
        let p = dir.join(f);
        assert!(p.is_file(), "missing {}", p.display());
    }
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    assert!(report.get("passed").is_some());
}

#[test]
fn certify_config_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("certify_ierk2_1.json");
    let o = ierk(&["certify", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_outputs(dir.path());
    assert_eq!(summary(&o)["certified"], Value::Bool(true));
}

#[test]
fn uncertified_parameters_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = ierk(
        &["certify", "IERK2-1", "--c2", "1", "--a33", "0.4"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
    assert_outputs(dir.path());
}

#[test]
fn config_overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("certify_ierk2_1.json");
    let o = ierk(
        &["certify", "--config", cfg.to_str().unwrap(), "--a33=0.4"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn custom_tableau_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("verify_custom.json");
    let o = ierk(&["verify", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(summary(&o)["attained_order"], Value::from(2));
}

#[test]
fn scan_config_finds_interval() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("scan_ierk3_1.json");
    let o = ierk(
        &["scan", "--config", cfg.to_str().unwrap(), "--step", "0.01"],
        dir.path(),
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_outputs(dir.path());
}

#[test]
fn rate_table_runs_without_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = ierk(&["rate-table"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let table = std::fs::read_to_string(dir.path().join("table.csv")).unwrap();
    assert_eq!(table.lines().count(), 11);
}

#[test]
fn short_converge_and_evolve() {
    let dir = tempfile::tempdir().unwrap();
    let o = ierk(
        &[
            "converge",
            "IERK2-2",
            "--a33",
            "1",
            "--m",
            "32",
            "--tau-grid",
            "0.1,0.05,0.025",
        ],
        dir.path(),
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_outputs(dir.path());

    let dir = tempfile::tempdir().unwrap();
    let o = ierk(
        &[
            "evolve",
            "IERK2-2",
            "--a33",
            "1",
            "--m",
            "64",
            "--tau",
            "0.05",
            "--t-final",
            "2",
            "--record-stages",
        ],
        dir.path(),
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_outputs(dir.path());
    assert!(dir.path().join("stages.csv").is_file());
}

#[test]
fn invalid_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = ierk(&["certify", "IERK9"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["input_error"], Value::Bool(true));

    let cfg = dir.path().join("bad.json");
    std::fs::write(
        &cfg,
        r#"{"experiment": "certify", "method": {"id": "IERK1"}, "colour": 3}"#,
    )
    .unwrap();
    let o = ierk(&["certify", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));

    let cfg = configs().join("certify_ierk2_1.json");
    let o = ierk(&["evolve", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));

    let o = ierk(
        &["evolve", "IERK2-2", "--a33", "1", "--tau", "-1"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
}
