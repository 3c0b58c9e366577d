use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn amgct(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_amgct")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = amgct(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn square_level_one_mesh_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sq.msh");
    ok(&["mesh", "--geometry", "square", "-J", "1", "--out", p(&out)]);
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().next().unwrap(), "9 8 8");
}

#[test]
fn disk_mesh_boundary_sits_on_the_circle() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("disk.msh");
    ok(&["mesh", "--geometry", "disk", "--level", "3", "--out", p(&out)]);
    let mesh = amg_ct::mesh::load_mesh(&out).unwrap();
    assert!(!mesh.boundary_nodes.is_empty());
    for &i in &mesh.boundary_nodes {
        let [x, y] = mesh.nodes[i];
        assert!((x.hypot(y) - 0.5).abs() < 1e-12);
    }
}

#[test]
fn out_of_range_mesh_level_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = amgct(&["mesh", "--geometry", "disk", "-J", "1", "--out", p(&dir.path().join("x"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn assemble_writes_matrices() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["assemble", "--geometry", "square", "-J", "2", "--out", p(dir.path())]);
    let a = amg_ct::mm::read_matrix_market(dir.path().join("stiffness.mtx")).unwrap();
    assert_eq!((a.n_rows(), a.n_cols()), (9, 9));
    let nodes = fs::read_to_string(dir.path().join("interior_nodes.txt")).unwrap();
    assert_eq!(nodes.lines().count(), 9);
    assert!(dir.path().join("mass.mtx").exists() && dir.path().join("load.mtx").exists());
}

#[test]
fn hierarchy_of_tridiagonal_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let mtx = dir.path().join("t.mtx");
    let t = amg_ct::SparseMatrix::tridiagonal(5, -1.0, 2.0, -1.0);
    amg_ct::mm::write_matrix_market(&t, &mtx).unwrap();
    let out = dir.path().join("h");
    let stdout = ok(&["hierarchy", p(&mtx), "--out", p(&out)]);
    assert!(stdout.contains("sizes 5 2"), "{stdout}");
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("sizes 5 2"));
    assert!(out.join("level_0_A.mtx").exists() && out.join("level_0_P.mtx").exists());
}

#[test]
fn hierarchy_rejects_rectangular_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let mtx = dir.path().join("r.mtx");
    fs::write(&mtx, "%%MatrixMarket matrix coordinate real general\n2 3 1\n1 1 1.0\n").unwrap();
    let out = amgct(&["hierarchy", p(&mtx), "--out", p(&dir.path().join("h"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("h").exists());
}

#[test]
fn unknown_flag_fails() {
    assert_eq!(amgct(&["study", "--bogus"]).status.code(), Some(1));
}

#[test]
fn missing_mesh_file_leaves_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("study");
    let res = amgct(&["study", "--geometry", "mesh:/nonexistent/disk_{J}.msh", "--levels", "3", "--out", p(&out)]);
    assert_eq!(res.status.code(), Some(2));
    assert!(!out.join("ct_error.csv").exists());
}

#[test]
fn study_output_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        ok(&["study", "--geometry", "square", "--levels", "3..4", "--mode", "both", "--seed", "7", "--out", p(&out)]);
        out
    };
    let (a, b) = (run("a"), run("b"));
    for f in ["ct_error.csv", "full_tp_error.csv", "manifest.txt"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let csv = fs::read_to_string(a.join("ct_error.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("level,error"));
    assert_eq!(csv.lines().count(), 3);
    let times = fs::read_to_string(a.join("ct_time.csv")).unwrap();
    assert_eq!(times.lines().next(), Some("N,time"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("study.cfg");
    fs::write(&cfg, "# small run\ngeometry = square\nlevels = 3..4\nseed = 3\nn_eval = 50\n").unwrap();
    let out = dir.path().join("o");
    ok(&["study", "--config", p(&cfg), "--levels", "3", "--out", p(&out)]);
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("n_eval = 50") || manifest.contains("n_eval 50"), "{manifest}");
    let csv = fs::read_to_string(out.join("ct_error.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2, "{csv}");
}

#[test]
fn bad_config_line_reports_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "levels = 3\nthis is not a setting\n").unwrap();
    let res = amgct(&["study", "--config", p(&cfg), "--out", p(&dir.path().join("o"))]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains('2'));
}
