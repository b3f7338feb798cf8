//! The multilevel driver: one dense solve on the coarsest mesh, then exactly
//! one Newton correction per refinement, with per-level errors and timings.

use std::time::Instant;

use crate::assemble::{
    aligned_energy_distance, assemble_forms, energy_error_vs_exact, free_prolongation,
    AssembledForms, CoefficientSet,
};
use crate::eigen_newton::{
    coarse_solve_with, newton_step_multi, newton_step_single, EigenpairSet, NewtonOptions,
};
use crate::error::{Error, Result};
use crate::linalg::Csr;
use crate::mesh::MeshHierarchy;
use crate::reference::{direct_solve_with, richardson, DirectOptions, ExactEigen};

/// What eigenvalue errors are measured against.
#[derive(Debug, Clone, Default)]
pub enum Reference {
    /// Exact eigenpairs; energy errors are reported for simple eigenvalues.
    Exact(Vec<ExactEigen>),
    /// Reference values only.
    Values(Vec<f64>),
    /// Richardson extrapolation of direct solves on the two finest levels.
    Extrapolated,
    #[default]
    None,
}

#[derive(Debug, Clone)]
pub struct MultilevelOptions {
    pub quad_order: usize,
    pub newton: NewtonOptions,
    pub reference: Reference,
    pub direct: DirectOptions,
    /// Keep every level's eigenpairs in the record.
    pub keep_iterates: bool,
}

impl Default for MultilevelOptions {
    fn default() -> Self {
        MultilevelOptions {
            quad_order: 2,
            newton: NewtonOptions::default(),
            reference: Reference::None,
            direct: DirectOptions::default(),
            keep_iterates: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LevelRecord {
    pub level: usize,
    pub h: f64,
    pub n_free: usize,
    pub eigenvalues: Vec<f64>,
    pub eigenvalue_errors: Vec<Option<f64>>,
    pub energy_errors: Vec<Option<f64>>,
    pub wall_time_assemble: f64,
    pub wall_time_solve: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ConvergenceRecord {
    pub levels: Vec<LevelRecord>,
    /// Least-squares slope of `log(error)` against `log(h)` over the last
    /// three levels, per eigenvalue.
    pub observed_orders: Vec<Option<f64>>,
    pub energy_orders: Vec<Option<f64>>,
    pub reference_values: Option<Vec<f64>>,
    pub final_set: EigenpairSet,
    pub iterates: Vec<EigenpairSet>,
}

/// Slope of the least-squares line through `(log h, log e)`.
pub fn fitted_order(h: &[f64], err: &[f64]) -> Option<f64> {
    if h.len() != err.len() || h.len() < 2 || err.iter().any(|&e| !(e > 0.0)) {
        return None;
    }
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    slope.is_finite().then_some(slope)
}

/// Orders per column over the last three levels (or fewer when unavailable).
pub fn orders_from_columns(h: &[f64], columns: &[Vec<Option<f64>>]) -> Vec<Option<f64>> {
    let start = h.len().saturating_sub(3);
    columns
        .iter()
        .map(|col| {
            let tail: Option<Vec<f64>> = col[start..].iter().copied().collect();
            tail.and_then(|e| fitted_order(&h[start..], &e))
        })
        .collect()
}

/// Assembled pencils and free-DOF lifts for every level of a hierarchy.
pub struct LevelForms {
    pub forms: Vec<AssembledForms>,
    pub lifts: Vec<Csr>,
    pub assemble_times: Vec<f64>,
}

pub fn assemble_levels(
    hierarchy: &MeshHierarchy,
    coeffs: &CoefficientSet,
    quad_order: usize,
) -> Result<LevelForms> {
    let mut forms = Vec::with_capacity(hierarchy.n_levels());
    let mut lifts = Vec::with_capacity(hierarchy.n_levels().saturating_sub(1));
    let mut assemble_times = Vec::with_capacity(hierarchy.n_levels());
    for (k, mesh) in hierarchy.levels().iter().enumerate() {
        let t = Instant::now();
        let f = assemble_forms(mesh, coeffs, quad_order).map_err(|e| e.at_level(k + 1))?;
        if k > 0 {
            lifts.push(
                free_prolongation(hierarchy.prolongation(k - 1), &forms[k - 1], &f)
                    .map_err(|e| e.at_level(k + 1))?,
            );
        }
        assemble_times.push(t.elapsed().as_secs_f64());
        forms.push(f);
    }
    Ok(LevelForms {
        forms,
        lifts,
        assemble_times,
    })
}

fn is_simple(values: &[f64], i: usize) -> bool {
    let v = values[i];
    let close = |w: f64| (v - w).abs() <= 1e-12 * v.abs();
    !(i > 0 && close(values[i - 1])) && !(i + 1 < values.len() && close(values[i + 1]))
}

/// Runs the multilevel scheme on `hierarchy`; levels are numbered from 1.
pub fn run_multilevel(
    hierarchy: &MeshHierarchy,
    coeffs: &CoefficientSet,
    m: usize,
    options: &MultilevelOptions,
) -> Result<ConvergenceRecord> {
    run_multilevel_observed(hierarchy, coeffs, m, options, |_| Ok(()))
}

/// As [`run_multilevel`], calling `on_level` as soon as each level finishes.
/// Errors from later levels leave the already reported levels intact.
///
/// Eigenvalue errors against an extrapolated reference are only known after
/// the last level, so reported records carry `None` errors in that case.
pub fn run_multilevel_observed(
    hierarchy: &MeshHierarchy,
    coeffs: &CoefficientSet,
    m: usize,
    options: &MultilevelOptions,
    mut on_level: impl FnMut(&LevelRecord) -> Result<()>,
) -> Result<ConvergenceRecord> {
    let levels = hierarchy.levels();
    let mut records = Vec::with_capacity(levels.len());
    let mut iterates = Vec::new();
    let mut forms_prev: Option<AssembledForms> = None;
    let mut set: Option<EigenpairSet> = None;

    let reference_values: Option<Vec<f64>> = match &options.reference {
        Reference::Exact(ex) => Some(ex.iter().map(|e| e.value).collect()),
        Reference::Values(v) => Some(v.clone()),
        _ => None,
    };
    if let Some(r) = &reference_values {
        if r.len() < m {
            return Err(Error::Domain(format!(
                "reference provides {} values for {m} eigenpairs",
                r.len()
            )));
        }
    }

    for (k, mesh) in levels.iter().enumerate() {
        let level = k + 1;
        let t = Instant::now();
        let forms = assemble_forms(mesh, coeffs, options.quad_order).map_err(|e| e.at_level(level))?;
        let lift = match &forms_prev {
            Some(fp) => Some(
                free_prolongation(hierarchy.prolongation(k - 1), fp, &forms).map_err(|e| e.at_level(level))?,
            ),
            None => None,
        };
        let wall_time_assemble = t.elapsed().as_secs_f64();

        let t = Instant::now();
        let (next, warnings) = match (&set, &lift) {
            (None, _) => (coarse_solve_with(&forms, m, &options.newton), Vec::new()),
            (Some(prev), Some(lift)) if m == 1 => {
                match newton_step_single(&forms, &prev.pairs[0], lift, &options.newton) {
                    Ok(s) => (Ok(EigenpairSet { pairs: vec![s.pair] }), s.warnings),
                    Err(e) => (Err(e), Vec::new()),
                }
            }
            (Some(prev), Some(lift)) => match newton_step_multi(&forms, prev, lift, &options.newton) {
                Ok(s) => (Ok(s.set), s.warnings),
                Err(e) => (Err(e), Vec::new()),
            },
            (Some(_), None) => unreachable!("every level after the first has a lift"),
        };
        let mut next = next.map_err(|e| e.at_level(level))?;
        for p in &mut next.pairs {
            p.level = k;
        }
        let wall_time_solve = t.elapsed().as_secs_f64();

        let eigenvalues = next.values();
        let eigenvalue_errors = match &reference_values {
            Some(r) => eigenvalues.iter().zip(r).map(|(l, r)| Some((l - r).abs())).collect(),
            None => vec![None; m],
        };
        let energy_errors = match &options.reference {
            Reference::Exact(ex) => {
                let values: Vec<f64> = ex.iter().map(|e| e.value).collect();
                (0..m)
                    .map(|i| {
                        if !is_simple(&values, i) {
                            return Ok(None);
                        }
                        let e = ex[i];
                        energy_error_vs_exact(&forms, mesh, &next.pairs[i].vector, |p| e.u(p), |p| e.grad(p))
                            .map(Some)
                    })
                    .collect::<Result<Vec<_>>>()
                    .map_err(|e| e.at_level(level))?
            }
            _ => vec![None; m],
        };
        let record = LevelRecord {
            level,
            h: mesh.h(),
            n_free: forms.n_free,
            eigenvalues,
            eigenvalue_errors,
            energy_errors,
            wall_time_assemble,
            wall_time_solve,
            warnings,
        };
        on_level(&record)?;
        records.push(record);
        if options.keep_iterates {
            iterates.push(next.clone());
        }
        set = Some(next);
        forms_prev = Some(forms);
    }

    let final_set = set.ok_or_else(|| Error::Domain("hierarchy has no levels".into()))?;
    let mut reference_values = reference_values;
    if matches!(options.reference, Reference::Extrapolated) {
        let n = levels.len();
        if n < 2 {
            return Err(Error::Domain("extrapolated reference needs at least two levels".into()));
        }
        let coarse = assemble_forms(&levels[n - 2], coeffs, options.quad_order)?;
        let fine = forms_prev.as_ref().expect("at least one level");
        let lh = direct_solve_with(&coarse, m, &options.direct).map_err(|e| e.at_level(n - 1))?;
        let lh2 = direct_solve_with(fine, m, &options.direct).map_err(|e| e.at_level(n))?;
        let r: Vec<f64> = lh.values().iter().zip(lh2.values()).map(|(a, b)| richardson(*a, b)).collect();
        for rec in &mut records {
            rec.eigenvalue_errors = rec.eigenvalues.iter().zip(&r).map(|(l, r)| Some((l - r).abs())).collect();
        }
        reference_values = Some(r);
    }

    let h: Vec<f64> = records.iter().map(|r| r.h).collect();
    let eig_cols: Vec<Vec<Option<f64>>> =
        (0..m).map(|i| records.iter().map(|r| r.eigenvalue_errors[i]).collect()).collect();
    let en_cols: Vec<Vec<Option<f64>>> =
        (0..m).map(|i| records.iter().map(|r| r.energy_errors[i]).collect()).collect();
    Ok(ConvergenceRecord {
        observed_orders: orders_from_columns(&h, &eig_cols),
        energy_orders: orders_from_columns(&h, &en_cols),
        levels: records,
        reference_values,
        final_set,
        iterates,
    })
}

#[derive(Debug, Clone)]
pub struct DirectComparison {
    pub level: usize,
    pub direct_values: Vec<f64>,
    /// `|λ_ml - λ_dir|` per eigenvalue.
    pub value_diffs: Vec<f64>,
    /// Sign-aligned `‖u_ml - u_dir‖_a` per eigenvalue.
    pub energy_diffs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ComparedRecord {
    pub multilevel: ConvergenceRecord,
    pub direct: Vec<DirectComparison>,
    pub direct_sets: Vec<EigenpairSet>,
}

/// Runs the multilevel scheme and an independent direct solve on every level.
pub fn compare_with_direct(
    hierarchy: &MeshHierarchy,
    coeffs: &CoefficientSet,
    m: usize,
    options: &MultilevelOptions,
) -> Result<ComparedRecord> {
    let mut opts = options.clone();
    opts.keep_iterates = true;
    let ml = run_multilevel(hierarchy, coeffs, m, &opts)?;
    let (direct, direct_sets) = direct_comparison(hierarchy, coeffs, &ml, options)?;
    let mut multilevel = ml;
    if !options.keep_iterates {
        multilevel.iterates.clear();
    }
    Ok(ComparedRecord {
        multilevel,
        direct,
        direct_sets,
    })
}

/// Direct solves on every level of a finished run that kept its iterates.
pub fn direct_comparison(
    hierarchy: &MeshHierarchy,
    coeffs: &CoefficientSet,
    record: &ConvergenceRecord,
    options: &MultilevelOptions,
) -> Result<(Vec<DirectComparison>, Vec<EigenpairSet>)> {
    if record.iterates.len() != hierarchy.n_levels() {
        return Err(Error::Domain("comparison needs the iterates of every level".into()));
    }
    let m = record.final_set.len();
    let mut direct = Vec::with_capacity(hierarchy.n_levels());
    let mut direct_sets = Vec::with_capacity(hierarchy.n_levels());
    for (k, mesh) in hierarchy.levels().iter().enumerate() {
        let level = k + 1;
        let forms = assemble_forms(mesh, coeffs, options.quad_order).map_err(|e| e.at_level(level))?;
        let it = &record.iterates[k];
        let set = if k == 0 {
            // the coarse level is the same dense solve in both pipelines
            it.clone()
        } else {
            direct_solve_with(&forms, m, &options.direct).map_err(|e| e.at_level(level))?
        };
        let value_diffs = it.values().iter().zip(set.values()).map(|(a, b)| (a - b).abs()).collect();
        let energy_diffs = it
            .pairs
            .iter()
            .zip(&set.pairs)
            .map(|(a, b)| aligned_energy_distance(&forms, &a.vector, &b.vector))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| e.at_level(level))?;
        direct.push(DirectComparison {
            level,
            direct_values: set.values(),
            value_diffs,
            energy_diffs,
        });
        direct_sets.push(set);
    }
    Ok((direct, direct_sets))
}
