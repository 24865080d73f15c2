use std::path::{Path, PathBuf};
use std::process::Command;

use inflow_ns::io::read_table;
use inflow_ns::pipeline::{verify_manifest, Status, MANIFEST};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_inflow-ns"))
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(format!("{name}.toml"))
}

#[test]
fn audit_verb_writes_a_verifiable_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let status = bin()
        .args(["audit", "--config"])
        .arg(config("closed_still"))
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let stdout = String::from_utf8_lossy(&status.stdout);
    assert!(stdout.contains("mass-ledger: PASS"), "{stdout}");

    let m = verify_manifest(&out).unwrap();
    assert!(m.pass);
    assert_eq!(m.summary("energy-inequality").unwrap().status, Status::Pass);
    let mut listed: Vec<String> = m.artifacts.iter().map(|a| a.path.clone()).collect();
    listed.push(MANIFEST.to_string());
    listed.sort();
    let mut on_disk: Vec<String> =
        std::fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().to_string()).collect();
    on_disk.sort();
    assert_eq!(listed, on_disk);

    let (header, rows) = read_table(&out.join("run_log.csv")).unwrap();
    assert_eq!(header[0], "step");
    assert!(!rows.is_empty());
}

#[test]
fn rerunning_into_the_same_directory_replaces_the_outputs() {
    let dir = tempfile::tempdir().unwrap();
    for _ in 0..2 {
        let s = bin().args(["simulate", "--config"]).arg(config("closed_still")).arg("--out").arg(dir.path()).output().unwrap();
        assert!(s.status.success());
    }
    verify_manifest(dir.path()).unwrap();
}

#[test]
fn foreign_files_in_the_output_directory_are_not_overwritten() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("notes.txt"), "keep").unwrap();
    let out = bin().args(["simulate", "--config"]).arg(config("closed_still")).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(std::fs::read_to_string(dir.path().join("notes.txt")).unwrap(), "keep");
}

#[test]
fn tampered_artifacts_fail_verification() {
    let dir = tempfile::tempdir().unwrap();
    let s = bin().args(["constants", "--config"]).arg(config("constants")).arg("--out").arg(dir.path()).output().unwrap();
    assert!(s.status.success());
    std::fs::write(dir.path().join("constants.csv"), "edited").unwrap();
    assert!(verify_manifest(dir.path()).is_err());
}

#[test]
fn artificial_pressure_exponent_below_the_bound_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(config("probe_inflow")).unwrap().replace("beta = 5.0", "beta = 3.0");
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, text).unwrap();
    let out = bin().args(["probe", "--config"]).arg(&path).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("beta"), "{err}");
}

#[test]
fn unknown_keys_and_missing_flags_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("typo.toml");
    std::fs::write(&path, std::fs::read_to_string(config("closed_still")).unwrap().replace("mu = 0.5", "mu = 0.5\nmuu = 1.0")).unwrap();
    let out = bin().args(["simulate", "--config"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("muu"));

    let out = bin().arg("simulate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn seed_flag_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let s = bin()
        .args(["audit", "--config"])
        .arg(config("inflow_smooth"))
        .args(["--seed", "11", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(s.status.success());
    assert_eq!(verify_manifest(dir.path()).unwrap().seed, 11);
}
