//! Black-box behavior of the `holoscale` binary: exit codes, outputs, and
//! the golden-verification workflow including fault injection.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_holoscale"))
}

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

#[test]
fn run_missing_config_exits_2() {
    let out = bin().args(["run", "definitely_missing.cdl"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_invalid_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.cdl");
    // base point outside the domain
    std::fs::write(
        &path,
        r#"
domain { r = abs(z) - 1; r = abs(w) - 1; radius = 2; }
family { f = z; g = w; alpha(j) = 1 - 2^(-j); limit = 1; }
experiment { q = (5, 0); jmin = 1; jmax = 8; }
"#,
    )
    .unwrap();
    let out = bin().args(["run"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn run_numerical_failure_exits_3() {
    // det J = a^5 with a_j = 2^{-j} sinks below the degeneracy floor by
    // j = 10; truncating the window keeps the run healthy
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("steep.cdl");
    std::fs::write(
        &path,
        r#"
domain { rho = abs(z)^4; radius = 1; }
family { f = a*z; g = a^4*w; alpha(j) = 2^(-j); limit = 0; }
experiment { q = (0, i); jmin = 1; jmax = 12; gridradius = 0.45; cloud = 50; cloudboundary = 10; cloudradius = 0.8; tol.zero = 0.05; }
"#,
    )
    .unwrap();
    let out = bin().args(["run"]).arg(&path).args(["--quiet", "--out"]).arg(dir.path().join("o1")).output().unwrap();
    assert_eq!(out.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let out = bin()
        .args(["run"])
        .arg(&path)
        .args(["--quiet", "--jmax", "6", "--out"])
        .arg(dir.path().join("o2"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn run_writes_report_and_series() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = bin()
        .args(["run"])
        .arg(corpus_dir().join("identity.cdl"))
        .args(["--out"])
        .arg(&out_dir)
        .args(["--quiet"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("report.json").is_file());
    assert!(out_dir.join("series/diagnostics.csv").is_file());
    assert!(out_dir.join("series/cloud_final.txt").is_file());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["verdicts"]["case"], "compact");
}

#[test]
fn honors_the_output_env_var() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("env_out");
    let out = bin()
        .args(["run"])
        .arg(corpus_dir().join("identity.cdl"))
        .args(["--quiet"])
        .env("HOLOSCALE_OUT", &out_dir)
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out_dir.join("report.json").is_file());
}

#[test]
fn verify_pristine_corpus_passes() {
    let out = bin().args(["verify"]).arg(corpus_dir()).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "stdout: {stdout}");
    assert_eq!(stdout.matches("PASS").count(), 6, "stdout: {stdout}");
}

#[test]
fn verify_catches_a_perturbed_golden() {
    // copy the corpus, then nudge one eigenvalue in one golden by 10%
    let dir = tempfile::tempdir().unwrap();
    let fake = dir.path().join("corpus");
    std::fs::create_dir_all(fake.join("golden")).unwrap();
    for entry in std::fs::read_dir(corpus_dir()).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "cdl") {
            std::fs::copy(&p, fake.join(p.file_name().unwrap())).unwrap();
        }
    }
    for entry in std::fs::read_dir(corpus_dir().join("golden")).unwrap() {
        let p = entry.unwrap().path();
        std::fs::copy(&p, fake.join("golden").join(p.file_name().unwrap())).unwrap();
    }
    let victim = fake.join("golden/bidisc.report.json");
    let mut golden: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&victim).unwrap()).unwrap();
    let l2 = &mut golden["per_j"][5]["lambda2"]["re"];
    *l2 = serde_json::json!(l2.as_f64().unwrap() * 1.1);
    std::fs::write(&victim, serde_json::to_string_pretty(&golden).unwrap()).unwrap();

    let out = bin().args(["verify"]).arg(&fake).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(1), "stdout: {stdout}");
    assert!(stdout.contains("bidisc: FAIL"), "stdout: {stdout}");
    assert!(stdout.contains("lambda2"), "mismatch must name the field: {stdout}");
}

#[test]
fn verify_with_other_seed_keeps_verdicts() {
    let out = bin().args(["verify"]).arg(corpus_dir()).args(["--seed", "4242"]).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "stdout: {stdout}");
    assert!(stdout.contains("verdicts only"), "stdout: {stdout}");
}

#[test]
fn verify_missing_corpus_exits_2() {
    let out = bin().args(["verify", "no_such_dir"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let out = bin().args(["verify"]).arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
