//! Run configuration: flat `key = value` lines with `#` comments.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::assemble::{CoefficientSet, Preset};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::linalg::Backend;

#[derive(Debug, Clone, PartialEq)]
pub enum Problem {
    Laplace,
    Example2,
    Custom {
        a11: Expr,
        a12: Expr,
        a22: Expr,
        phi: Expr,
        rho: Expr,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    /// Structured unit square with `M` cells per side (`H = 1/M`).
    Structured { divisions: usize },
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendChoice {
    Direct,
    Minres,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: Problem,
    pub mesh: MeshSource,
    pub levels: usize,
    pub eigen_count: usize,
    pub quad_order: usize,
    pub newton_tol: f64,
    pub direct_tol: f64,
    pub compare_direct: bool,
    pub benchmark: bool,
    pub bench_max_levels: usize,
    pub output: PathBuf,
    pub threads: usize,
    pub max_vertices: usize,
    pub coarse_cap: usize,
    pub backend: BackendChoice,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: Problem::Laplace,
            mesh: MeshSource::Structured { divisions: 6 },
            levels: 3,
            eigen_count: 1,
            quad_order: 2,
            newton_tol: 1e-10,
            direct_tol: 1e-12,
            compare_direct: false,
            benchmark: false,
            bench_max_levels: 6,
            output: PathBuf::from("mlnewton"),
            threads: 1,
            max_vertices: 4_000_000,
            coarse_cap: 3000,
            backend: BackendChoice::Direct,
        }
    }
}

const KEYS: &[&str] = &[
    "problem",
    "mesh_h",
    "mesh_file",
    "levels",
    "eigen_count",
    "quad_order",
    "newton_tol",
    "direct_tol",
    "compare_direct",
    "benchmark",
    "bench_max_levels",
    "output",
    "threads",
    "max_vertices",
    "coarse_cap",
    "backend",
    "a11",
    "a12",
    "a22",
    "phi",
    "rho",
];

impl RunConfig {
    pub fn coefficients(&self) -> CoefficientSet {
        match &self.problem {
            Problem::Laplace => CoefficientSet::laplace(),
            Problem::Example2 => CoefficientSet::example2(),
            Problem::Custom {
                a11,
                a12,
                a22,
                phi,
                rho,
            } => {
                let (a11, a12, a22) = (a11.clone(), a12.clone(), a22.clone());
                let (phi, rho) = (phi.clone(), rho.clone());
                CoefficientSet::custom(
                    Arc::new(move |p| {
                        let off = a12.eval(p);
                        [[a11.eval(p), off], [off, a22.eval(p)]]
                    }),
                    Arc::new(move |p| phi.eval(p)),
                    Arc::new(move |p| rho.eval(p)),
                )
            }
        }
    }

    pub fn preset(&self) -> Preset {
        match self.problem {
            Problem::Laplace => Preset::Laplace,
            Problem::Example2 => Preset::Example2,
            Problem::Custom { .. } => Preset::Custom,
        }
    }

    pub fn backend(&self) -> Backend {
        match self.backend {
            BackendChoice::Direct => Backend::Direct,
            BackendChoice::Minres => Backend::Minres {
                preconditioner: None,
                max_iter: 5000,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels == 0 {
            return Err(Error::Config("levels must be at least 1".into()));
        }
        if self.eigen_count == 0 {
            return Err(Error::Config("eigen_count must be at least 1".into()));
        }
        if !matches!(self.quad_order, 2 | 5) {
            return Err(Error::Config(format!(
                "quad_order must be 2 or 5, got {}",
                self.quad_order
            )));
        }
        if let MeshSource::Structured { divisions: 0 } = self.mesh {
            return Err(Error::Config("mesh_h must be 1/M with M >= 1".into()));
        }
        for (name, v) in [("newton_tol", self.newton_tol), ("direct_tol", self.direct_tol)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        if self.threads == 0 {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        if self.benchmark && self.bench_max_levels < 2 {
            return Err(Error::Config("bench_max_levels must be at least 2".into()));
        }
        Ok(())
    }
}

/// `1/M` or a decimal that is the reciprocal of an integer.
fn parse_h(value: &str) -> std::result::Result<usize, String> {
    let value = value.trim();
    if let Some(rest) = value.strip_prefix("1/") {
        return rest
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&m| m >= 1)
            .ok_or_else(|| format!("'{value}' is not 1/M for a positive integer M"));
    }
    let h: f64 = value.parse().map_err(|_| format!("'{value}' is not a number"))?;
    crate::mesh::reciprocal_divisions(h).map_err(|e| e.to_string())
}

fn parse_bool(value: &str) -> std::result::Result<bool, String> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(format!("'{value}' is not a boolean")),
    }
}

fn parse_num<T: std::str::FromStr>(value: &str) -> std::result::Result<T, String> {
    value.parse().map_err(|_| format!("'{value}' is not a valid number"))
}

/// Parses configuration text. `strict` rejects unrecognized keys.
pub fn parse_config_str(text: &str, path: &Path, strict: bool) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut quad_set = false;
    let mut exprs: [Option<Expr>; 5] = Default::default();
    let mut problem_name = "laplace".to_string();
    let mut mesh_h: Option<usize> = None;
    let mut mesh_file: Option<PathBuf> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message,
        };
        let Some((key, value)) = line.split_once('=') else {
            return Err(err(format!("expected 'key = value', found '{line}'")));
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            if strict {
                return Err(err(format!("unknown key '{key}'")));
            }
            log::warn!("{}:{line_no}: ignoring unknown key '{key}'", path.display());
            continue;
        }
        let r: std::result::Result<(), String> = (|| {
            match key {
                "problem" => {
                    if !matches!(value, "laplace" | "example2" | "custom") {
                        return Err(format!("unknown problem '{value}' (laplace, example2, custom)"));
                    }
                    problem_name = value.to_string();
                }
                "mesh_h" => mesh_h = Some(parse_h(value)?),
                "mesh_file" => mesh_file = Some(PathBuf::from(value)),
                "levels" => cfg.levels = parse_num(value)?,
                "eigen_count" => cfg.eigen_count = parse_num(value)?,
                "quad_order" => {
                    cfg.quad_order = parse_num(value)?;
                    quad_set = true;
                }
                "newton_tol" => cfg.newton_tol = parse_num(value)?,
                "direct_tol" => cfg.direct_tol = parse_num(value)?,
                "compare_direct" => cfg.compare_direct = parse_bool(value)?,
                "benchmark" => cfg.benchmark = parse_bool(value)?,
                "bench_max_levels" => cfg.bench_max_levels = parse_num(value)?,
                "output" => cfg.output = PathBuf::from(value),
                "threads" => cfg.threads = parse_num(value)?,
                "max_vertices" => cfg.max_vertices = parse_num(value)?,
                "coarse_cap" => cfg.coarse_cap = parse_num(value)?,
                "backend" => {
                    cfg.backend = match value {
                        "direct" => BackendChoice::Direct,
                        "minres" => BackendChoice::Minres,
                        _ => return Err(format!("unknown backend '{value}' (direct, minres)")),
                    }
                }
                coef => {
                    let slot = ["a11", "a12", "a22", "phi", "rho"]
                        .iter()
                        .position(|k| *k == coef)
                        .expect("coefficient key");
                    exprs[slot] = Some(Expr::parse(value).map_err(|e| e.to_string())?);
                }
            }
            Ok(())
        })();
        r.map_err(err)?;
    }

    let any_expr = exprs.iter().any(Option::is_some);
    cfg.problem = match problem_name.as_str() {
        "laplace" | "example2" if any_expr => {
            return Err(Error::Config(format!(
                "coefficient expressions require problem = custom (problem is {problem_name})"
            )))
        }
        "laplace" => Problem::Laplace,
        "example2" => Problem::Example2,
        _ => {
            let [a11, a12, a22, phi, rho] = exprs;
            Problem::Custom {
                a11: a11.unwrap_or(Expr::Num(1.0)),
                a12: a12.unwrap_or(Expr::Num(0.0)),
                a22: a22.unwrap_or(Expr::Num(1.0)),
                phi: phi.unwrap_or(Expr::Num(0.0)),
                rho: rho.unwrap_or(Expr::Num(1.0)),
            }
        }
    };
    if !quad_set && cfg.problem != Problem::Laplace {
        cfg.quad_order = 5;
    }
    cfg.mesh = match (mesh_h, mesh_file) {
        (Some(_), Some(_)) => return Err(Error::Config("set either mesh_h or mesh_file, not both".into())),
        (_, Some(f)) => MeshSource::File(f),
        (Some(m), None) => MeshSource::Structured { divisions: m },
        (None, None) => MeshSource::Structured { divisions: 6 },
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_config(path: impl AsRef<Path>, strict: bool) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text, path, strict)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, strict: bool) -> Result<RunConfig> {
        parse_config_str(text, Path::new("test.cfg"), strict)
    }

    #[test]
    fn empty_file_gives_defaults() {
        let c = parse("", true).unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.mesh, MeshSource::Structured { divisions: 6 });
        assert_eq!((c.levels, c.eigen_count), (3, 1));
    }

    #[test]
    fn example2_uses_its_coefficients_and_degree_five() {
        let c = parse("problem=example2", true).unwrap();
        assert_eq!(c.problem, Problem::Example2);
        assert_eq!(c.quad_order, 5);
        let rho = (c.coefficients().weight)([0.9, 0.2]);
        assert!((rho - (1.0 + 0.4 * -0.3)).abs() < 1e-15);
    }

    #[test]
    fn levels_zero_rejected() {
        assert!(matches!(parse("levels = 0", true), Err(Error::Config(_))));
    }

    #[test]
    fn strict_mode_names_the_key_and_line() {
        let text = "levels = 2\n# comment\nbogus = 1\n";
        match parse(text, true) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("bogus"));
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(parse(text, false).unwrap().levels, 2);
    }

    #[test]
    fn mesh_h_forms() {
        assert_eq!(parse("mesh_h = 1/12", true).unwrap().mesh, MeshSource::Structured { divisions: 12 });
        assert_eq!(parse("mesh_h = 0.25", true).unwrap().mesh, MeshSource::Structured { divisions: 4 });
        assert!(parse("mesh_h = 0.3", true).is_err());
        assert!(parse("mesh_h = 1/0", true).is_err());
        assert!(parse("mesh_h = 1/4\nmesh_file = a.mesh", true).is_err());
    }

    #[test]
    fn custom_expressions() {
        let c = parse("problem = custom\na11 = 1 + x1^2\nrho = 2 # heavy\n", true).unwrap();
        let k = c.coefficients();
        assert_eq!((k.diffusion)([0.5, 0.0])[0][0], 1.25);
        assert_eq!((k.weight)([0.1, 0.1]), 2.0);
        assert_eq!(c.quad_order, 5);
        assert!(parse("a11 = 2", true).is_err());
        assert!(parse("problem = custom\nphi = sin(", true).is_err());
    }

    #[test]
    fn malformed_values() {
        for text in ["levels = two", "compare_direct = maybe", "backend = gmres", "justtext", "problem = heat"] {
            assert!(parse(text, false).is_err(), "{text}");
        }
        assert!(parse("quad_order = 3", true).is_err());
    }
}
