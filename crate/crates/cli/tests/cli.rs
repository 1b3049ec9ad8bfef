use std::process::Command;

fn capmod(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_capmod")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).into_owned())
}

#[test]
fn build_writes_artifacts_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, stdout) = capmod(&["build", "--out", out, "--seed", "7"]);
    assert_eq!(code, 0, "{stdout}");
    assert!(stdout.contains("PASS 8. structural invariants"));
    for f in ["y.off", "x.json", "topology.csv", "build.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn report_without_inputs_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let (code, stdout) = capmod(&["report", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 3);
    assert!(stdout.contains("MISSING 1. solver calibration"));
}

#[test]
fn invalid_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "p = 0.5\n").unwrap();
    assert_eq!(capmod(&["build", "--config", cfg.to_str().unwrap()]).0, 2);
    std::fs::write(&cfg, "no_such_key = 1\n").unwrap();
    assert_eq!(capmod(&["llc", "--config", cfg.to_str().unwrap()]).0, 2);
}
