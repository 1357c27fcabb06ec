use std::process::Command;

fn poro() -> Command {
    Command::new(env!("CARGO_BIN_EXE_poro"))
}

#[test]
fn solve_exit_codes() {
    let ok = poro().args(["solve", "--n", "4", "--solver", "gmres"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("iterations"));
    let fail = poro().args(["solve", "--n", "4", "--maxit", "2"]).output().unwrap();
    assert_eq!(fail.status.code(), Some(2));
    let bad = poro().args(["solve", "--solver", "cg"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# tight budget\nmaxit = 2\n").unwrap();
    let out = poro()
        .args(["solve", "--n", "4", "--maxit", "500", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn experiment_and_export_write_files() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("t.csv");
    let out = poro()
        .args(["experiment", "--ns", "4", "--lambdas", "1", "--dts", "1e-3", "--out"])
        .arg(&table)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&table).unwrap();
    assert_eq!(text.lines().count(), 3);
    let mesh = dir.path().join("m.vtk");
    let out = poro().args(["export-mesh", "--dim", "3", "--n", "2", "--out"]).arg(&mesh).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(std::fs::read_to_string(&mesh).unwrap().contains("CELLS 48 240"));
    let eig = dir.path().join("e.csv");
    let out = poro().args(["eig", "--n", "4", "--lambda", "1e4", "--out"]).arg(&eig).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(&eig).unwrap().lines().count(), 3);
}
