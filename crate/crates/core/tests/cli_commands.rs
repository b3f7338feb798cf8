use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::Command;

use mlnewton::mesh::{save_mesh, unit_square_mesh};
use mlnewton::multilevel::fitted_order;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mlnewton"))
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let prefix = dir.join(name);
    let path = dir.join(format!("{name}.cfg"));
    std::fs::write(&path, format!("output = {}\n{body}", prefix.display())).unwrap();
    path
}

fn solve(cfg: &Path) -> std::process::Output {
    bin().arg("solve").arg(cfg).output().unwrap()
}

struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    trailer: Vec<String>,
}

fn read_csv(path: &Path) -> Csv {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let mut rows = Vec::new();
    let mut trailer = Vec::new();
    for l in lines {
        if l.starts_with('#') {
            trailer.push(l.to_string());
        } else {
            rows.push(l.split(',').map(String::from).collect());
        }
    }
    Csv { header, rows, trailer }
}

impl Csv {
    fn col(&self, name: &str) -> Vec<String> {
        let i = self.header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
        self.rows.iter().map(|r| r[i].clone()).collect()
    }

    fn num(&self, name: &str) -> Vec<f64> {
        self.col(name).iter().map(|v| v.parse().unwrap()).collect()
    }
}

#[test]
fn single_level_laplace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "one", "mesh_h = 1/2\nlevels = 1\n");
    let out = solve(&cfg);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read_csv(&dir.path().join("one_levels.csv"));
    assert_eq!(csv.rows.len(), 1);
    assert!(csv.num("lambda_1")[0] >= 2.0 * PI * PI);
    assert!(dir.path().join("one_summary.txt").exists());
}

#[test]
fn six_laplace_eigenvalues_shrink_by_four() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "six", "levels = 4\neigen_count = 6\n");
    assert!(solve(&cfg).status.success());
    let csv = read_csv(&dir.path().join("six_levels.csv"));
    assert_eq!(csv.rows.len(), 4);
    for i in 1..=6 {
        let err = csv.num(&format!("err_lambda_{i}"));
        for w in err.windows(2) {
            let r = w[0] / w[1];
            assert!((3.0..=5.0).contains(&r), "eigenvalue {i}: ratio {r}");
        }
        let energy = csv.col(&format!("err_energy_{i}"));
        assert_eq!(energy.iter().all(|e| e.is_empty()), ![1, 4].contains(&i), "eigenvalue {i}");
    }
}

#[test]
fn example2_comparison_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ex2", "problem = example2\nlevels = 4\neigen_count = 6\ncompare_direct = true\n");
    assert!(solve(&cfg).status.success());
    let csv = read_csv(&dir.path().join("ex2_levels.csv"));
    for i in 1..=6 {
        let diff = csv.num(&format!("diff_dir_{i}"));
        let dir_vals = csv.num(&format!("lambda_dir_{i}"));
        assert_eq!(diff[0], 0.0);
        assert!(diff[3] / dir_vals[3] <= 1e-4);
    }
}

fn masked(path: &Path) -> Vec<String> {
    let csv = read_csv(path);
    let skip: Vec<usize> = ["time_assemble_s", "time_solve_s"]
        .iter()
        .map(|n| csv.header.iter().position(|h| h == n).unwrap())
        .collect();
    csv.rows
        .iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .filter(|(i, _)| !skip.contains(i))
                .map(|(_, v)| v.as_str())
                .collect::<Vec<_>>()
                .join(",")
        })
        .collect()
}

#[test]
fn repeated_single_threaded_runs_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let body = "levels = 4\neigen_count = 3\nthreads = 1\ncompare_direct = true\n";
    let a = write_config(dir.path(), "a", body);
    let b = write_config(dir.path(), "b", body);
    assert!(solve(&a).status.success());
    assert!(solve(&b).status.success());
    let (ra, rb) = (masked(&dir.path().join("a_levels.csv")), masked(&dir.path().join("b_levels.csv")));
    assert_eq!(ra, rb);
}

#[test]
fn summary_orders_match_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ord", "levels = 4\neigen_count = 2\n");
    assert!(solve(&cfg).status.success());
    let csv = read_csv(&dir.path().join("ord_levels.csv"));
    let summary = std::fs::read_to_string(dir.path().join("ord_summary.txt")).unwrap();
    let h = csv.num("h");
    for i in 1..=2 {
        let err = csv.num(&format!("err_lambda_{i}"));
        let n = h.len();
        let ours = fitted_order(&h[n - 3..], &err[n - 3..]).unwrap();
        let line = summary
            .lines()
            .find(|l| l.starts_with(&format!("observed_order_{i} = ")))
            .unwrap();
        let reported: f64 = line.split('=').nth(1).unwrap().trim().parse().unwrap();
        assert!((reported - ours).abs() <= 5e-5, "{reported} vs {ours}");
    }
}

#[test]
fn solver_failure_leaves_aborted_trailer() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad", "levels = 3\nnewton_tol = 1e-300\n");
    let out = solve(&cfg);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read_csv(&dir.path().join("bad_levels.csv"));
    assert_eq!(csv.rows.len(), 1);
    assert_eq!(csv.trailer, vec!["# ABORTED level=2".to_string()]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("level 2"));
}

#[test]
fn exit_codes_for_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let zero = write_config(dir.path(), "zero", "levels = 0\n");
    assert_eq!(solve(&zero).status.code(), Some(2));

    let unknown = write_config(dir.path(), "unknown", "levles = 3\n");
    let strict = bin().args(["solve", "--strict"]).arg(&unknown).output().unwrap();
    assert_eq!(strict.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&strict.stderr);
    assert!(msg.contains("levles") && msg.contains(":2:"), "{msg}");
    assert!(bin().arg("solve").arg(&unknown).output().unwrap().status.success());

    let missing = bin().args(["solve", "/nonexistent/run.cfg"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(4));
    assert_eq!(bin().arg("frobnicate").output().unwrap().status.code(), Some(2));
}

#[test]
fn meshinfo_and_mesh_file_runs() {
    let dir = tempfile::tempdir().unwrap();
    let mesh_path = dir.path().join("square.mesh");
    save_mesh(&unit_square_mesh(0.25).unwrap(), &mesh_path).unwrap();
    let out = bin().arg("meshinfo").arg(&mesh_path).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("vertices: 25") && text.contains("triangles: 32") && text.contains("free DOFs: 9"), "{text}");

    let cfg = write_config(dir.path(), "file", &format!("mesh_file = {}\nlevels = 3\n", mesh_path.display()));
    assert!(solve(&cfg).status.success());
    let csv = read_csv(&dir.path().join("file_levels.csv"));
    assert_eq!(csv.num("n_free"), vec![9.0, 49.0, 225.0]);
    assert!(!csv.col("err_energy_1")[2].is_empty());

    std::fs::write(dir.path().join("broken.mesh"), "mesh2d 3 1\n0 0 1\n1 0 1\n0 1 1\n0 1 7\n").unwrap();
    let out = bin().arg("meshinfo").arg(dir.path().join("broken.mesh")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("triangle 0"));
}

#[test]
fn bench_with_two_levels_skips_the_fit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bench", "benchmark = true\nbench_max_levels = 2\n");
    let out = bin().arg("bench").arg(&cfg).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = std::fs::read_to_string(dir.path().join("bench_work.txt")).unwrap();
    assert!(report.contains("exponent fit skipped"), "{report}");
    assert!(!report.contains("fitted exponent"));
}
