use std::process::Command;

fn kinfluid() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kinfluid"))
}

fn run_sod(out: &std::path::Path, backend: &str) {
    let status = kinfluid()
        .args(["run", "--scenario", "sod1", "--backend", backend, "--nx", "60", "--nv", "16", "--t-final", "6e-3", "--out"])
        .arg(out)
        .output()
        .unwrap()
        .status;
    assert!(status.success());
}

#[test]
fn run_writes_manifest_and_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    run_sod(dir.path(), "split");
    let m = kinfluid::harness::read_manifest(dir.path()).unwrap();
    assert_eq!(m.snapshots.len(), 2);
    assert_eq!(m.scenario.space.nx, 60);
    let rows = kinfluid::harness::read_snapshot(dir.path().join(&m.snapshots[1].file)).unwrap();
    assert_eq!(rows.len(), 60);
}

#[test]
fn compare_prints_a_table() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_sod(a.path(), "euler");
    run_sod(b.path(), "kinetic");
    let out = kinfluid().arg("compare").arg(a.path()).arg(b.path()).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().next().unwrap().contains("L1"));
    assert!(text.lines().any(|l| l.contains(" rho ")));
    assert!(text.contains("wall-clock ratio"));
}

#[test]
fn riemann_outputs_csv() {
    let out = kinfluid()
        .args(["riemann", "--left", "2e-5,0,273.15", "--right", "0.25e-5,0,218.4", "--time", "6e-3", "--points", "11"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,rho,u,T,p");
    assert_eq!(lines.len(), 12);
    let first: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
    assert!((first[1] - 2e-5).abs() < 1e-18);
}

#[test]
fn unknown_scenario_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = kinfluid().args(["run", "--scenario", "nope", "--out"]).arg(dir.path()).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn hard_sphere_viscosity_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let status = kinfluid()
        .args(["run", "--scenario", "sod1", "--nx", "40", "--nv", "12", "--t-final", "1e-3", "--c-mu", "hard-sphere", "--out"])
        .arg(dir.path())
        .output()
        .unwrap()
        .status;
    assert!(status.success());
    let m = kinfluid::harness::read_manifest(dir.path()).unwrap();
    assert!(m.scenario.gas.c_mu < 1e-8);
}
