use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fhigs(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fhigs"))
        .args(args)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

const QUICK: &str = "[verify]
equivalence_configs = 2
equivalence_t_end = 0.2
switching_draws = 3
quadrature_draws = 2
incremental_pairs = 1
incremental_horizon = 10.0
";

#[test]
fn step_succeeds_with_shipped_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = fhigs(dir.path(), &["step"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(dir.path().join("out/step.csv").exists());
}

#[test]
fn show_filter_prints_the_reduced_filter() {
    let dir = tempfile::tempdir().unwrap();
    let o = fhigs(dir.path(), &["df", "--show-filter"]);
    assert_eq!(o.status.code(), Some(0));
    let s = String::from_utf8(o.stdout).unwrap();
    assert!(s.starts_with("num = ") && s.contains("den = "));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.toml");
    let o = fhigs(dir.path(), &["simulate", "--config", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[verify]\nsede = 3\n").unwrap();
    let o = fhigs(dir.path(), &["verify", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sede"));
}

#[test]
fn verify_exit_code_follows_the_checks() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.toml");
    fs::write(&good, QUICK).unwrap();
    let o = fhigs(dir.path(), &["verify", "--config", good.to_str().unwrap(), "--seed", "11"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));

    let bad = dir.path().join("perturbed.toml");
    fs::write(&bad, format!("{QUICK}a2_perturbation = 0.1\n")).unwrap();
    let o = fhigs(dir.path(), &["verify", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let s = String::from_utf8(o.stdout).unwrap();
    assert!(s.lines().any(|l| l.starts_with("FAIL ")));
    assert!(fs::read_to_string(dir.path().join("out/verify.txt")).unwrap().contains("FAIL "));
}
