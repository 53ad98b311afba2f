use std::process::Command;

use bethe_loops::harness::Report;

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bethe-loops"))
}

#[test]
fn theorem1_json_to_stdout() {
    let out = cli()
        .args(["theorem1", "--n", "8,12", "--trials", "3", "--p", "0.4"])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rep: Report = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rep.records.len(), 6);
    assert_eq!(rep.aggregates.len(), 2);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out = dir.path().join("run.csv");
    std::fs::write(&cfg, "n = 6\ntrials = 4\nformat = csv\n").unwrap();
    let status = cli()
        .args(["identity", "--config"])
        .arg(&cfg)
        .args(["--trials", "2", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn same_seed_same_bytes() {
    let run = || {
        cli()
            .args([
                "theorem2", "--n", "8", "--trials", "2", "--h", "0.05", "--seed", "9",
            ])
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run(), run());
}

#[test]
fn invalid_parameters_fail_cleanly() {
    let out = cli().args(["theorem1", "--n", "7"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("n=7"));
    let out = cli()
        .args(["census", "--config", "/no/such/file"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("/no/such/file"));
}
