//! Command implementations behind the `mlnewton` binary: `solve`, `bench`
//! and `meshinfo`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::assemble::free_dofs;
use crate::config::{MeshSource, Problem, RunConfig};
use crate::error::{Error, Result};
use crate::linalg::BorderedOptions;
use crate::mesh::{build_hierarchy_with, load_mesh, unit_square_divisions, HierarchyOptions, Mesh, MeshHierarchy};
use crate::multilevel::{
    direct_comparison, fitted_order, run_multilevel_observed, ConvergenceRecord, DirectComparison,
    LevelRecord, MultilevelOptions, Reference,
};
use crate::eigen_newton::NewtonOptions;
use crate::reference::{exact_laplace, DirectOptions};

pub fn coarse_mesh(cfg: &RunConfig) -> Result<Mesh> {
    match &cfg.mesh {
        MeshSource::Structured { divisions } => unit_square_divisions(*divisions),
        MeshSource::File(path) => load_mesh(path),
    }
}

pub fn hierarchy(cfg: &RunConfig, levels: usize) -> Result<MeshHierarchy> {
    let opts = HierarchyOptions {
        max_vertices: cfg.max_vertices,
        ..Default::default()
    };
    build_hierarchy_with(coarse_mesh(cfg)?, levels, &opts)
}

fn is_unit_square(mesh: &Mesh) -> bool {
    let inside = mesh
        .vertices()
        .iter()
        .all(|p| (-1e-12..=1.0 + 1e-12).contains(&p[0]) && (-1e-12..=1.0 + 1e-12).contains(&p[1]));
    inside && (mesh.area() - 1.0).abs() < 1e-12
}

/// Exact values for Laplace on the unit square, extrapolation otherwise.
pub fn default_reference(cfg: &RunConfig, coarse: &Mesh) -> Result<Reference> {
    if cfg.problem == Problem::Laplace && is_unit_square(coarse) && cfg.eigen_count <= 20 {
        return Ok(Reference::Exact(exact_laplace(cfg.eigen_count)?));
    }
    Ok(if cfg.levels >= 2 {
        Reference::Extrapolated
    } else {
        Reference::None
    })
}

pub fn multilevel_options(cfg: &RunConfig, reference: Reference) -> MultilevelOptions {
    MultilevelOptions {
        quad_order: cfg.quad_order,
        newton: NewtonOptions {
            bordered: BorderedOptions {
                tol: cfg.newton_tol,
                backend: cfg.backend(),
                ..Default::default()
            },
            coarse_dense_cap: cfg.coarse_cap,
            ..Default::default()
        },
        reference,
        direct: DirectOptions {
            tol: cfg.direct_tol,
            ..Default::default()
        },
        keep_iterates: cfg.compare_direct,
    }
}

fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot create a pool of {threads} threads: {e}")))?;
    pool.install(f)
}

fn csv_header(m: usize, compare: bool) -> String {
    let mut s = String::from("level,h,n_free,time_assemble_s,time_solve_s");
    for i in 1..=m {
        write!(s, ",lambda_{i},err_lambda_{i},err_energy_{i}").unwrap();
    }
    if compare {
        for i in 1..=m {
            write!(s, ",lambda_dir_{i},diff_dir_{i}").unwrap();
        }
    }
    s
}

fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f).unwrap_or_default()
}

fn csv_row(r: &LevelRecord, dir: Option<&DirectComparison>) -> String {
    let mut s = format!(
        "{},{},{},{},{}",
        r.level,
        fmt_f(r.h),
        r.n_free,
        fmt_f(r.wall_time_assemble),
        fmt_f(r.wall_time_solve)
    );
    for i in 0..r.eigenvalues.len() {
        write!(
            s,
            ",{},{},{}",
            fmt_f(r.eigenvalues[i]),
            fmt_opt(r.eigenvalue_errors[i]),
            fmt_opt(r.energy_errors[i])
        )
        .unwrap();
    }
    if let Some(d) = dir {
        for i in 0..d.direct_values.len() {
            write!(s, ",{},{}", fmt_f(d.direct_values[i]), fmt_f(d.value_diffs[i])).unwrap();
        }
    }
    s
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(suffix);
    prefix.with_file_name(name)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn fmt_order(o: Option<f64>) -> String {
    o.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"))
}

/// Files and results of one `solve` run.
#[derive(Debug)]
pub struct SolveOutput {
    pub csv_path: PathBuf,
    pub summary_path: PathBuf,
    pub record: ConvergenceRecord,
    pub direct: Option<Vec<DirectComparison>>,
}

fn summary_text(cfg: &RunConfig, rec: &ConvergenceRecord, direct: Option<&[DirectComparison]>, total: f64) -> String {
    let mut s = String::new();
    let m = rec.final_set.len();
    writeln!(s, "problem: {}", cfg.preset()).unwrap();
    match &cfg.mesh {
        MeshSource::Structured { divisions } => writeln!(s, "coarse mesh: unit square, H = 1/{divisions}").unwrap(),
        MeshSource::File(p) => writeln!(s, "coarse mesh: {}", p.display()).unwrap(),
    }
    writeln!(s, "levels: {}", rec.levels.len()).unwrap();
    writeln!(s, "eigenpairs: {m}").unwrap();
    writeln!(s, "quadrature degree: {}", cfg.quad_order).unwrap();
    if let Some(r) = &rec.reference_values {
        let list: Vec<String> = r.iter().map(|v| format!("{v:.12}")).collect();
        writeln!(s, "reference eigenvalues: {}", list.join(", ")).unwrap();
    }
    writeln!(s).unwrap();
    writeln!(s, "{:>5} {:>12} {:>9}  eigenvalues", "level", "h", "n_free").unwrap();
    for r in &rec.levels {
        let list: Vec<String> = r.eigenvalues.iter().map(|v| format!("{v:.12}")).collect();
        writeln!(s, "{:>5} {:>12.6e} {:>9}  {}", r.level, r.h, r.n_free, list.join(" ")).unwrap();
    }
    writeln!(s).unwrap();
    for i in 0..m {
        writeln!(
            s,
            "observed_order_{} = {}",
            i + 1,
            fmt_order(rec.observed_orders[i])
        )
        .unwrap();
    }
    for i in 0..m {
        if rec.energy_orders[i].is_some() {
            writeln!(s, "energy_order_{} = {}", i + 1, fmt_order(rec.energy_orders[i])).unwrap();
        }
    }
    if let Some(d) = direct.and_then(|d| d.last()) {
        let worst = d.value_diffs.iter().fold(0.0f64, |a, &b| a.max(b));
        writeln!(s, "finest |lambda_ml - lambda_dir| max = {worst:.6e}").unwrap();
    }
    let warnings: Vec<&String> = rec.levels.iter().flat_map(|r| &r.warnings).collect();
    if !warnings.is_empty() {
        writeln!(s).unwrap();
        for w in warnings {
            writeln!(s, "warning: {w}").unwrap();
        }
    }
    writeln!(s, "total wall time: {total:.3} s").unwrap();
    s
}

/// Runs the multilevel study described by `cfg` and writes
/// `<output>_levels.csv` and `<output>_summary.txt`. On a solver failure the
/// CSV keeps the finished levels and ends with `# ABORTED level=k`.
pub fn cmd_solve(cfg: &RunConfig) -> Result<SolveOutput> {
    cfg.validate()?;
    let csv_path = with_suffix(&cfg.output, "_levels.csv");
    let summary_path = with_suffix(&cfg.output, "_summary.txt");
    let m = cfg.eigen_count;
    with_threads(cfg.threads, || {
        let start = Instant::now();
        let hier = hierarchy(cfg, cfg.levels)?;
        let reference = default_reference(cfg, hier.level(0))?;
        let opts = multilevel_options(cfg, reference);
        let coeffs = cfg.coefficients();

        let mut partial: Vec<String> = Vec::new();
        let run = run_multilevel_observed(&hier, &coeffs, m, &opts, |r| {
            partial.push(csv_row(r, None));
            Ok(())
        })
        .and_then(|rec| {
            let direct = if cfg.compare_direct {
                Some(direct_comparison(&hier, &coeffs, &rec, &opts)?.0)
            } else {
                None
            };
            Ok((rec, direct))
        });
        let (rec, direct) = match run {
            Ok(v) => v,
            Err(e) => {
                let level = match &e {
                    Error::Level { level, .. } => *level,
                    _ => partial.len() + 1,
                };
                let mut text = csv_header(m, false);
                text.push('\n');
                for row in &partial {
                    text.push_str(row);
                    text.push('\n');
                }
                writeln!(text, "# ABORTED level={level}").unwrap();
                write_file(&csv_path, &text)?;
                return Err(e);
            }
        };

        let mut text = csv_header(m, direct.is_some());
        text.push('\n');
        for (k, r) in rec.levels.iter().enumerate() {
            text.push_str(&csv_row(r, direct.as_ref().map(|d| &d[k])));
            text.push('\n');
        }
        write_file(&csv_path, &text)?;
        let summary = summary_text(cfg, &rec, direct.as_deref(), start.elapsed().as_secs_f64());
        write_file(&summary_path, &summary)?;
        Ok(SolveOutput {
            csv_path: csv_path.clone(),
            summary_path: summary_path.clone(),
            record: rec,
            direct,
        })
    })
}

/// One benchmark run with `n_levels` levels.
#[derive(Debug, Clone)]
pub struct BenchRun {
    pub n_levels: usize,
    pub n_finest: usize,
    /// `(N_k, assemble seconds, solve seconds)` per level.
    pub levels: Vec<(usize, f64, f64)>,
    pub total_time: f64,
}

#[derive(Debug, Clone)]
pub struct WorkReport {
    pub runs: Vec<BenchRun>,
    /// Coarse-level solve time, the constant term of the work estimate.
    pub coarse_time: f64,
    /// Slope of `log(total time)` against `log(N_n)`.
    pub exponent: Option<f64>,
    /// Root-mean-square residual of that fit in log space.
    pub fit_residual: Option<f64>,
    /// `N_{k+1} / N_k` on the largest run.
    pub n_ratios: Vec<f64>,
    pub notes: Vec<String>,
    pub report_path: PathBuf,
    pub csv_path: PathBuf,
}

fn fit_with_residual(n: &[f64], t: &[f64]) -> Option<(f64, f64)> {
    let slope = fitted_order(n, t)?;
    let xs: Vec<f64> = n.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = t.iter().map(|v| v.ln()).collect();
    let k = xs.len() as f64;
    let intercept = (ys.iter().sum::<f64>() - slope * xs.iter().sum::<f64>()) / k;
    let ss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Some((slope, (ss / k).sqrt()))
}

/// Runs the scheme with 2, 3, …, `bench_max_levels` levels on the same coarse
/// mesh after one discarded warm-up run and fits total time against `N_n`.
pub fn cmd_bench(cfg: &RunConfig) -> Result<WorkReport> {
    let mut cfg = cfg.clone();
    cfg.compare_direct = false;
    cfg.validate()?;
    if cfg.bench_max_levels < 2 {
        return Err(Error::Config("bench_max_levels must be at least 2".into()));
    }
    let m = cfg.eigen_count;
    with_threads(cfg.threads, || {
        let full = hierarchy(&cfg, cfg.bench_max_levels)?;
        let coeffs = cfg.coefficients();
        let opts = multilevel_options(&cfg, Reference::None);
        let run = |n: usize| -> Result<BenchRun> {
            let sub = build_hierarchy_with(full.level(0).clone(), n, &HierarchyOptions {
                max_vertices: cfg.max_vertices,
                ..Default::default()
            })?;
            let rec = crate::multilevel::run_multilevel(&sub, &coeffs, m, &opts)?;
            let levels: Vec<(usize, f64, f64)> = rec
                .levels
                .iter()
                .map(|r| (r.n_free, r.wall_time_assemble, r.wall_time_solve))
                .collect();
            let total_time = levels.iter().map(|l| l.1 + l.2).sum();
            Ok(BenchRun {
                n_levels: n,
                n_finest: levels.last().map_or(0, |l| l.0),
                levels,
                total_time,
            })
        };
        run(2)?;
        let runs: Vec<BenchRun> = (2..=cfg.bench_max_levels).map(run).collect::<Result<_>>()?;

        let mut notes = Vec::new();
        let (exponent, fit_residual) = if runs.len() >= 3 {
            let n: Vec<f64> = runs.iter().map(|r| r.n_finest as f64).collect();
            let t: Vec<f64> = runs.iter().map(|r| r.total_time.max(1e-9)).collect();
            match fit_with_residual(&n, &t) {
                Some((e, r)) => (Some(e), Some(r)),
                None => {
                    notes.push("exponent fit failed (non-positive times)".to_string());
                    (None, None)
                }
            }
        } else {
            notes.push(format!(
                "exponent fit skipped: {} run(s), at least 3 are needed",
                runs.len()
            ));
            (None, None)
        };
        let largest = runs.last().expect("at least one run");
        let n_ratios: Vec<f64> = largest
            .levels
            .windows(2)
            .map(|w| w[1].0 as f64 / w[0].0 as f64)
            .collect();
        let coarse_time = largest.levels[0].2;

        let report_path = with_suffix(&cfg.output, "_work.txt");
        let csv_path = with_suffix(&cfg.output, "_bench.csv");
        let mut csv = String::from("n_levels,n_finest,total_time_s\n");
        for r in &runs {
            writeln!(csv, "{},{},{}", r.n_levels, r.n_finest, fmt_f(r.total_time)).unwrap();
        }
        write_file(&csv_path, &csv)?;

        let mut s = String::new();
        writeln!(s, "problem: {}", cfg.preset()).unwrap();
        writeln!(s, "eigenpairs: {m}").unwrap();
        writeln!(s, "coarse solve time: {coarse_time:.6} s").unwrap();
        writeln!(s).unwrap();
        writeln!(s, "{:>8} {:>10} {:>14}", "n_levels", "N_n", "total_s").unwrap();
        for r in &runs {
            writeln!(s, "{:>8} {:>10} {:>14.6}", r.n_levels, r.n_finest, r.total_time).unwrap();
        }
        writeln!(s).unwrap();
        writeln!(s, "{:>5} {:>10} {:>8} {:>12} {:>12}", "level", "N_k", "ratio", "assemble_s", "solve_s").unwrap();
        for (k, l) in largest.levels.iter().enumerate() {
            let ratio = if k == 0 { String::new() } else { format!("{:.3}", n_ratios[k - 1]) };
            writeln!(s, "{:>5} {:>10} {:>8} {:>12.6} {:>12.6}", k + 1, l.0, ratio, l.1, l.2).unwrap();
        }
        writeln!(s).unwrap();
        match (exponent, fit_residual) {
            (Some(e), Some(r)) => writeln!(s, "fitted exponent (total time vs N_n): {e:.4} (rms log residual {r:.4})").unwrap(),
            _ => {}
        }
        for n in &notes {
            writeln!(s, "note: {n}").unwrap();
        }
        write_file(&report_path, &s)?;

        Ok(WorkReport {
            runs,
            coarse_time,
            exponent,
            fit_residual,
            n_ratios,
            notes,
            report_path: report_path.clone(),
            csv_path: csv_path.clone(),
        })
    })
}

/// Human-readable description of a mesh file.
pub fn cmd_meshinfo(path: impl AsRef<Path>) -> Result<String> {
    let mesh = load_mesh(path.as_ref())?;
    let mut s = String::new();
    writeln!(s, "file: {}", path.as_ref().display()).unwrap();
    writeln!(s, "vertices: {}", mesh.n_vertices()).unwrap();
    writeln!(s, "triangles: {}", mesh.n_triangles()).unwrap();
    writeln!(s, "boundary vertices: {}", mesh.n_boundary()).unwrap();
    writeln!(s, "boundary edges: {}", mesh.boundary_edges().len()).unwrap();
    writeln!(s, "free DOFs: {}", free_dofs(&mesh).len()).unwrap();
    writeln!(s, "area: {:.12}", mesh.area()).unwrap();
    writeln!(s, "h (longest edge): {:.6e}", mesh.h()).unwrap();
    writeln!(s, "diameter: {:.6e}", mesh.diameter()).unwrap();
    Ok(s)
}
