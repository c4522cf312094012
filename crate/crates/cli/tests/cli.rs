use std::path::Path;
use std::process::{Command, Output};

fn immersed(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_immersed")).current_dir(dir).args(args).output().unwrap()
}

const SMALL_RUN: &str = "\
set Final t = 0.02
set Delta t = 0.01
set Interval (of time-steps) between output = 1
set Solid mesh = disk:0.6,0.5,0.2
set Solid refinement = 1
set Fluid mesh = square:0,0,1,1
set Fluid refinement = 2
set Output base name = out/small
";

#[test]
fn missing_file_writes_defaults_and_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = immersed(dir.path(), &["params.prm"]);
    assert_eq!(out.status.code(), Some(2));
    let text = std::fs::read_to_string(dir.path().join("params.prm")).unwrap();
    assert!(text.contains("set Final t"));
    assert!(text.contains("subsection ug"));
}

#[test]
fn defaults_can_go_elsewhere() {
    let dir = tempfile::tempdir().unwrap();
    let out = immersed(dir.path(), &["--quiet", "--defaults-out", "templates/default.prm", "missing.prm"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(dir.path().join("templates/default.prm").exists());
    assert!(!dir.path().join("missing.prm").exists());
}

#[test]
fn written_defaults_parse_back() {
    let dir = tempfile::tempdir().unwrap();
    immersed(dir.path(), &["--quiet", "a.prm"]);
    let text = std::fs::read_to_string(dir.path().join("a.prm")).unwrap();
    let parsed: immersed_core::config::Parameters = text.parse().unwrap();
    assert_eq!(parsed, immersed_core::config::Parameters::default());
}

#[test]
fn small_run_succeeds_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("small.prm"), SMALL_RUN).unwrap();
    let out = immersed(dir.path(), &["--quiet", "small.prm"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    for f in ["small-fluid-0.vtk", "small-fluid-2.vtk", "small-solid-1.vtk", "small-report.csv"] {
        assert!(dir.path().join("out").join(f).exists(), "{f}");
    }
    let report = std::fs::read_to_string(dir.path().join("out/small-report.csv")).unwrap();
    assert!(report.starts_with("step,t,u_max,newton_iters,solid_area,area_change_pct\n"));
    assert_eq!(report.lines().count(), 3);
}

#[test]
fn bad_parameters_fail_with_status_1() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.prm"), "set Delta t = -1\n").unwrap();
    let out = immersed(dir.path(), &["bad.prm"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Delta t"));
}

#[test]
fn missing_mesh_fails_with_status_1() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("m.prm"), "set Fluid mesh = square:0,0,1,1\nset Solid mesh = nowhere.inp\n").unwrap();
    let out = immersed(dir.path(), &["m.prm"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere.inp"));
}
