use std::process::Command;

fn segflow() -> Command {
    Command::new(env!("CARGO_BIN_EXE_segflow"))
}

#[test]
fn passing_lmin_sweep_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = segflow()
        .args(["lmin", "--k", "2", "--lambda", "10,100", "--nodes", "240", "--out"])
        .arg(dir.path().join("run"))
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{text}");
    assert!(text.lines().any(|l| l.starts_with("PASS lmin.")));
    assert!(text.contains("manifest.json"));
}

#[test]
fn failing_verdicts_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    // One coarse radius cannot reach the limiting frequency.
    let out = segflow()
        .args(["run", "--scenario", "cosh", "--R", "2", "--density-x", "16", "--ny", "32", "--out"])
        .arg(dir.path().join("run"))
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(1), "{text}");
    assert!(text.lines().any(|l| l.starts_with("FAIL ")));
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad_schedule = segflow()
        .args(["run", "--scenario", "cosh", "--R", "3,2", "--out"])
        .arg(dir.path().join("a"))
        .output()
        .unwrap();
    assert_eq!(bad_schedule.status.code(), Some(2));

    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"scenario":"cosh","out":"x","unknown-key":1}"#).unwrap();
    let unknown = segflow().arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(unknown.status.code(), Some(2));

    let missing = segflow().arg("--config").arg(dir.path().join("absent.json")).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn json_config_drives_a_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let cfg = dir.path().join("lmin.json");
    std::fs::write(
        &cfg,
        format!(r#"{{"scenario":"lmin","k":3,"lambda":[10],"nodes":240,"out":{}}}"#, serde_json_string(&out)),
    )
    .unwrap();
    let status = segflow().arg("--config").arg(&cfg).output().unwrap().status;
    assert_eq!(status.code(), Some(0));
    assert!(out.join("manifest.json").exists());
    assert!(out.join("verdicts.txt").exists());
}

fn serde_json_string(p: &std::path::Path) -> String {
    format!("{:?}", p.to_str().unwrap())
}
