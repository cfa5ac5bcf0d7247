use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn lighthill(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lighthill"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn nested_intersection_writes_512_records() {
    let dir = tempfile::tempdir().unwrap();
    let o = lighthill(dir.path(), &["--set", "general.output_dir=run", "intersect"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(dir.path().join("run/summary.csv")).unwrap();
    let row: Vec<&str> = summary.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(&row[..5], ["64", "512", "512", "512", "0"]);
    let echo = fs::read_to_string(dir.path().join("run/config.echo")).unwrap();
    assert!(echo.contains("[intersect]") && echo.contains("cartesian:8x8x8"), "{echo}");
    assert!(dir.path().join("run/timing.txt").exists());
}

#[test]
fn csv_outputs_do_not_depend_on_workers() {
    let dir = tempfile::tempdir().unwrap();
    let ini = dir.path().join("run.ini");
    fs::write(
        &ini,
        format!("seed = 3\n[intersect]\nacoustic = cartesian:3x3x3\nfluid = {}\n", fixture("voronoi_1000.mesh").display()),
    )
    .unwrap();
    let ini = ini.to_str().unwrap();
    for (w, out) in [("1", "general.output_dir=a"), ("3", "general.output_dir=b")] {
        let o = lighthill(dir.path(), &["-c", ini, "--workers", w, "--set", out, "intersect"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let read = |p: &str| fs::read(dir.path().join(p)).unwrap();
    assert_eq!(read("a/cutmesh.txt"), read("b/cutmesh.txt"));
    assert_eq!(read("a/summary.csv"), read("b/summary.csv"));
}

#[test]
fn integrate_check_passes_on_the_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    let f1 = format!("integrate-check.fluid_mesh_1={}", fixture("polygons_109.mesh").display());
    let f2 = format!("integrate-check.fluid_mesh_2={}", fixture("voronoi_1000.mesh").display());
    let o = lighthill(dir.path(), &["--set", &f1, "--set", &f2, "integrate-check"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("out/integration.csv")).unwrap();
    assert_eq!(csv.lines().count(), 19);
}

#[test]
fn generated_mesh_validates() {
    let dir = tempfile::tempdir().unwrap();
    let o = lighthill(dir.path(), &["--set", "mesh.kind=distorted", "--set", "mesh.cells=3 2 2", "mesh", "gen", "m.mesh"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = lighthill(dir.path(), &["mesh", "validate", "m.mesh"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.starts_with("valid hexahedral mesh: 12 cells"), "{s}");
}

#[test]
fn input_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let unknown_key = lighthill(dir.path(), &["--set", "intersect.acustic=cartesian:2x2x2", "intersect"]);
    assert_eq!(unknown_key.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&unknown_key.stderr).contains("acustic"));
    let missing = lighthill(dir.path(), &["mesh", "validate", "nope.mesh"]);
    assert_eq!(missing.status.code(), Some(1));
    let usage = lighthill(dir.path(), &["frobnicate"]);
    assert_eq!(usage.status.code(), Some(1));
    let bad_value = lighthill(dir.path(), &["--set", "general.workers=many", "intersect"]);
    assert_eq!(bad_value.status.code(), Some(1));
}

#[test]
fn tiny_projection_sweep_writes_slopes() {
    let dir = tempfile::tempdir().unwrap();
    let o = lighthill(
        dir.path(),
        &[
            "--set",
            "project-sweep.acoustic_cells=2",
            "--set",
            "project-sweep.degrees=1",
            "--set",
            "project-sweep.refinements=2,4",
            "project-sweep",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let sweep = fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    assert_eq!(sweep.lines().next().unwrap(), "h_a,h_f,r,E_a,E_fp,E_pa,method");
    assert_eq!(sweep.lines().count(), 5);
    let slopes = fs::read_to_string(dir.path().join("out/slopes.csv")).unwrap();
    assert_eq!(slopes.lines().count(), 3);
}
