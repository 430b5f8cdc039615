use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn blowup(args: &[&str], extra: &[&Path]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blowup")).args(args).args(extra).output().unwrap()
}

#[test]
fn validate_accepts_shipped_configs() {
    for name in ["reference.ini", "upper_bound.ini", "bump_potential.ini", "rate_p2.ini", "rate_p3.ini"] {
        let out = blowup(&["validate"], &[&config(name)]);
        assert!(out.status.success(), "{name}: {}", String::from_utf8_lossy(&out.stdout));
    }
}

#[test]
fn broken_config_exits_with_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.ini");
    let text = fs::read_to_string(config("reference.ini")).unwrap().replace("[exponent]\np = 2", "[exponent]\np = 0.5");
    fs::write(&path, text).unwrap();
    let out = blowup(&["sweep"], &[&path]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));

    fs::write(&path, "[domain]\ndimension = 1\ncolour = red\n").unwrap();
    assert_eq!(blowup(&["validate"], &[&path]).status.code(), Some(2));
}

#[test]
fn sweep_writes_every_artifact_and_report_reads_them_back() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("res");
    let status = blowup(&["--jobs", "2", "sweep"], &[&config("reference.ini"), Path::new("--out"), &out]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stdout));

    let csv = fs::read_to_string(out.join("results.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "M,T_est,T_est_scaled,T_upper,blowup_point_x,concentration_residual,rate_exponent,w_center_final,E_final,E_target,stop_reason,error"
    );
    assert_eq!(lines.count(), 4);
    assert_eq!(fs::read_to_string(out.join("results.jsonl")).unwrap().lines().count(), 4);
    for f in ["tm_vs_M.dat", "r_vs_M.dat", "energy_vs_s.dat"] {
        assert!(out.join("plotdata").join(f).is_file(), "{f}");
    }
    let trace = fs::read_to_string(out.join("traces/energy_M160.csv")).unwrap();
    assert!(trace.starts_with("s,E,w_center"));
    assert_eq!(trace.lines().count(), 4);

    let written = fs::read_to_string(out.join("report.txt")).unwrap();
    assert!(written.ends_with("overall: PASS\n"));
    let report = blowup(&["report"], &[&out]);
    assert!(report.status.success());
    assert_eq!(String::from_utf8_lossy(&report.stdout), written);
}

#[test]
fn failing_check_sets_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("strict.ini");
    let text = fs::read_to_string(config("reference.ini")).unwrap().replace("scaling_tol = 0.15", "scaling_tol = 0.001");
    fs::write(&path, text).unwrap();
    let out = blowup(&["sweep"], &[&path, Path::new("--out"), &dir.path().join("res")]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL scaling"));
}

#[test]
fn run_skips_sweep_level_checks() {
    let dir = tempfile::tempdir().unwrap();
    let out = blowup(&["run"], &[&config("reference.ini"), Path::new("--out"), &dir.path().join("res")]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}");
    assert!(stdout.contains("SKIP scaling"));
    assert!(stdout.contains("PASS rate"));
}
