use std::process::Command;

use mzeuler::diagnostics::{read_csv, Manifest};

fn mzeuler() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mzeuler"))
}

#[test]
fn desk_check_run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = mzeuler()
        .args(["run", "--preset", "desk-check", "-o"])
        .arg(dir.path())
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout.contains("verify: terms vs word oracle"), "{stdout}");

    let records = read_csv(&dir.path().join("energy.csv")).unwrap();
    assert_eq!(records.first().unwrap().t, 0.0);
    assert!((records.last().unwrap().t - 1.0).abs() < 1e-12);
    let text = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    let manifest: Manifest = serde_json::from_str(&text).unwrap();
    assert_eq!(manifest.status, "completed");
    let v = manifest.verification.unwrap();
    assert!(v.term_oracle_rel_diff.unwrap() <= 1e-10);
    assert!(v.memory_rel_diff.unwrap() <= 1e-10);

    // The manifest reproduces the run configuration.
    let again = tempfile::tempdir().unwrap();
    let out = mzeuler()
        .args(["run", "--config"])
        .arg(dir.path().join("manifest.json"))
        .args(["--t-end", "0.1", "-o"])
        .arg(again.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let first = read_csv(&again.path().join("energy.csv")).unwrap();
    assert_eq!(first[1], records[1]);
}

#[test]
fn blow_up_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = mzeuler()
        .args(["run", "--model", "galerkin-full", "--n", "4", "--dt", "1", "--t-end", "400", "--t0", "inf", "-o"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let text = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
    let manifest: Manifest = serde_json::from_str(&text).unwrap();
    assert_eq!(manifest.status, "blow-up");
    assert!(manifest.blow_up.unwrap().t < 400.0);
}

#[test]
fn invalid_configuration_exits_with_one() {
    for args in [
        vec!["run", "--preset", "desk-check", "--t0", "0.0015"],
        vec!["run", "--model", "order-9"],
        vec!["run", "--set", "colour=blue"],
    ] {
        let out = mzeuler().args(&args).output().unwrap();
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"), "{args:?}");
    }
}

#[test]
fn show_terms_lists_sums() {
    let out = mzeuler().args(["show-terms", "2", "--plan"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("sums: 12"), "{text}");
    assert!(text.contains("degree: 5"), "{text}");
}
