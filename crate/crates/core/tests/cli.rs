//! The `wgstokes` binary end to end.

use std::process::{Command, Output};

fn wgstokes(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wgstokes")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn cases_lists_the_registry() {
    let o = wgstokes(&["cases"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for name in ["poly-exact-k1", "stream-quartic", "sine-vortex"] {
        assert!(text.contains(name), "{text}");
    }
}

#[test]
fn verify_reports_defects() {
    let o = wgstokes(&["verify", "--case", "stream-quartic"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("force defect"));
}

#[test]
fn unknown_case_is_a_configuration_error() {
    let o = wgstokes(&["verify", "--case", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("registered cases") && err.contains("poly-exact-k1"), "{err}");
}

#[test]
fn study_writes_csv_and_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rot.csv");
    let o = wgstokes(&[
        "study", "--case", "poly-exact-k1", "--family", "hexagonal", "--degree", "1", "--n0", "2", "--levels",
        "3", "--out", out.to_str().unwrap(), "--condense", "--dump-matrices",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.lines().last().unwrap().starts_with("rates,,,exact,exact"));
    for file in ["A.coo", "B.coo", "c.txt", "rhs_u.txt", "rhs_p.txt"] {
        assert!(dir.path().join("rot-matrices/level-2").join(file).exists(), "{file}");
    }
    // one JSON solve report per level on stderr
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(err.lines().filter(|l| l.contains("\"method\":\"condensed\"")).count(), 3);
}

#[test]
fn threshold_failure_sets_exit_status() {
    // two coarse levels past n0 = 1 are far from asymptotic for k = 1
    let o = wgstokes(&["study", "--case", "sine-vortex", "--n0", "1", "--levels", "3"]);
    assert_eq!(o.status.code(), Some(1), "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL"));
}

#[test]
fn infsup_table() {
    let o = wgstokes(&["infsup", "--family", "uniform-quad", "--n0", "2", "--levels", "2"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("min/max"));
}

#[test]
fn bad_family_is_rejected() {
    let o = wgstokes(&["infsup", "--family", "circle"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("uniform-quad"));
}
