//! One Newton correction per level for a single eigenpair or for a group of
//! `m` eigenpairs, plus the coarse-level dense eigensolve that seeds them.
//!
//! A correction lifts the coarse iterate `u` into the finer space, solves the
//! bordered system
//!
//! ```text
//! (A - λB) û - λ̂ Bu = -λ Bu,     b(û, u) = b(u, u)
//! ```
//!
//! and returns the `b`-normalized `û` together with its Rayleigh quotient.
//! For several eigenpairs each correction is constrained against all lifted
//! iterates, and the corrected vectors are combined by Rayleigh–Ritz.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::assemble::{b_norm, b_normalize, rayleigh_quotient, AssembledForms};
use crate::error::{Error, Result};
use crate::linalg::{
    dense_gen_eig, dot, solve_bordered_with, spd_condition, Backend, BorderedMatrix,
    BorderedOptions, Csr, Symbolic,
};

/// Approximate eigenvalue with a `b`-normalized free-DOF vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub level: usize,
}

/// `m` pairs on one level, ascending and mutually `b`-orthogonal.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenpairSet {
    pub pairs: Vec<Eigenpair>,
}

impl EigenpairSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.value).collect()
    }

    pub fn level(&self) -> usize {
        self.pairs.first().map_or(0, |p| p.level)
    }

    /// Largest `|b(u_i, u_j)|` for `i ≠ j` and `|b(u_i, u_i) - 1|`.
    pub fn orthonormality_error(&self, forms: &AssembledForms) -> f64 {
        let bu: Vec<Vec<f64>> = self.pairs.iter().map(|p| forms.mass.mul_vec(&p.vector)).collect();
        let mut worst: f64 = 0.0;
        for (i, p) in self.pairs.iter().enumerate() {
            for (j, bq) in bu.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(&p.vector, bq) - target).abs());
            }
        }
        worst
    }
}

#[derive(Debug, Clone)]
pub struct NewtonOptions {
    pub bordered: BorderedOptions,
    /// Tolerance on the constraint rows before normalization.
    pub constraint_tol: f64,
    /// Rayleigh–Ritz Gram matrices above this condition number are rejected.
    pub max_gram_condition: f64,
    /// Dense coarse solves are refused above this many free DOFs.
    pub coarse_dense_cap: usize,
    /// When the MINRES backend is selected without a preconditioner, precondition
    /// the core with the level's stiffness matrix.
    pub precondition_with_stiffness: bool,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            bordered: BorderedOptions::default(),
            constraint_tol: 1e-8,
            max_gram_condition: 1e12,
            coarse_dense_cap: 3000,
            precondition_with_stiffness: true,
        }
    }
}

/// Sign convention for direct eigensolves: the first coefficient larger than
/// `1e-10 · max|x|` is made positive.
pub(crate) fn canonical_sign(x: &mut [f64]) {
    let max = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if let Some(first) = x.iter().find(|v| v.abs() > 1e-10 * max) {
        if *first < 0.0 {
            x.iter_mut().for_each(|v| *v = -*v);
        }
    }
}

/// Dense eigensolve of the whole pencil, keeping the lowest `m` pairs.
pub fn coarse_solve(forms: &AssembledForms, m: usize) -> Result<EigenpairSet> {
    coarse_solve_with(forms, m, &NewtonOptions::default())
}

pub fn coarse_solve_with(forms: &AssembledForms, m: usize, options: &NewtonOptions) -> Result<EigenpairSet> {
    let n = forms.n_free;
    if m == 0 {
        return Err(Error::Domain("number of eigenpairs must be at least 1".into()));
    }
    if m > n {
        return Err(Error::Domain(format!(
            "requested {m} eigenpairs but the coarse space has only {n} free DOFs"
        )));
    }
    if n > options.coarse_dense_cap {
        return Err(Error::Domain(format!(
            "coarse space has {n} free DOFs, above the dense-solve cap of {}",
            options.coarse_dense_cap
        )));
    }
    let eig = dense_gen_eig(&forms.stiffness.to_dense(), &forms.mass.to_dense())?;
    if m < n {
        let gap = eig.values[m] - eig.values[m - 1];
        if gap < 1e-8 * eig.values[m - 1].abs() {
            log::warn!(
                "eigenvalue {} and {} are nearly equal ({:e}); the first {m} pairs split a cluster",
                m,
                m + 1,
                gap
            );
        }
    }
    pairs_from_columns(forms, &eig.values, &eig.vectors, m, 0)
}

pub(crate) fn pairs_from_columns(
    forms: &AssembledForms,
    values: &[f64],
    vectors: &DMatrix<f64>,
    m: usize,
    level: usize,
) -> Result<EigenpairSet> {
    let mut pairs = Vec::with_capacity(m);
    for (k, &value) in values.iter().enumerate().take(m) {
        let mut x: Vec<f64> = vectors.column(k).iter().copied().collect();
        b_normalize(forms, &mut x)?;
        canonical_sign(&mut x);
        let rq = rayleigh_quotient(forms, &x)?;
        debug_assert!((rq - value).abs() <= 1e-8 * value.abs().max(1.0));
        pairs.push(Eigenpair {
            value: rq,
            vector: x,
            level,
        });
    }
    Ok(EigenpairSet { pairs })
}

/// Diagnostics of a single-pair correction.
#[derive(Debug, Clone)]
pub struct SingleStep {
    pub pair: Eigenpair,
    /// The multiplier `λ̂` of the bordered system.
    pub multiplier: f64,
    /// `|b(û, u) - b(u, u)|` before normalization.
    pub constraint_error: f64,
    pub residual: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct MultiStep {
    pub set: EigenpairSet,
    /// Column `i` holds the multipliers `x_{·i}` of the `i`-th bordered solve.
    pub multipliers: Vec<Vec<f64>>,
    pub constraint_error: f64,
    pub residuals: Vec<f64>,
    pub gram_condition: f64,
    pub warnings: Vec<String>,
}

fn bordered_options(forms: &AssembledForms, options: &NewtonOptions) -> BorderedOptions {
    let mut opts = options.bordered.clone();
    if let Backend::Minres { preconditioner, .. } = &mut opts.backend {
        if preconditioner.is_none() && options.precondition_with_stiffness {
            *preconditioner = Some(std::sync::Arc::new(forms.stiffness.clone()));
        }
    }
    opts
}

fn lift(lift: &Csr, forms_fine: &AssembledForms, x: &[f64]) -> Result<Vec<f64>> {
    if lift.ncols() != x.len() || lift.nrows() != forms_fine.n_free {
        return Err(Error::Domain(format!(
            "lift operator is {}x{}, cannot map {} coarse DOFs to {} fine DOFs",
            lift.nrows(),
            lift.ncols(),
            x.len(),
            forms_fine.n_free
        )));
    }
    Ok(lift.mul_vec(x))
}

/// One Newton correction of a single eigenpair on the next finer level.
///
/// `lift` maps coarse free DOFs into fine free DOFs (see
/// [`crate::assemble::free_prolongation`]).
pub fn newton_step_single(
    forms_fine: &AssembledForms,
    prev: &Eigenpair,
    lift: &Csr,
    options: &NewtonOptions,
) -> Result<SingleStep> {
    let u = self::lift(lift, forms_fine, &prev.vector)?;
    let bu = forms_fine.mass.mul_vec(&u);
    let buu = dot(&u, &bu);
    if !(buu > 0.0) {
        return Err(Error::Domain("lifted iterate has zero weight norm".into()));
    }
    let mu = prev.value;
    let core = forms_fine.stiffness.add_scaled(1.0, &forms_fine.mass, -mu);
    let matrix = BorderedMatrix::new(core, vec![bu.clone()])?;
    let rhs_top: Vec<f64> = bu.iter().map(|v| -mu * v).collect();
    let sol = solve_bordered_with(
        &matrix,
        &rhs_top,
        &[buu],
        &bordered_options(forms_fine, options),
        None,
    )?;

    let mut uhat = sol.w;
    let constraint_error = (dot(&uhat, &bu) - buu).abs();
    if constraint_error > options.constraint_tol * buu.max(1.0) {
        return Err(Error::LinearSolve {
            message: format!("constraint b(û, u) = b(u, u) violated by {constraint_error:e}"),
            residual: sol.residual,
        });
    }
    b_normalize(forms_fine, &mut uhat)?;
    let value = rayleigh_quotient(forms_fine, &uhat)?;

    let mut warnings = Vec::new();
    if value > mu * (1.0 + 1e-9) {
        let w = format!(
            "level {}: Rayleigh quotient rose from {mu} to {value}; the coarse mesh may be too coarse",
            prev.level + 1
        );
        log::warn!("{w}");
        warnings.push(w);
    }
    Ok(SingleStep {
        pair: Eigenpair {
            value,
            vector: uhat,
            level: prev.level + 1,
        },
        multiplier: sol.gamma[0],
        constraint_error,
        residual: sol.residual,
        warnings,
    })
}

/// One Newton correction of `m` eigenpairs followed by Rayleigh–Ritz on the
/// span of the corrected vectors.
pub fn newton_step_multi(
    forms_fine: &AssembledForms,
    prev: &EigenpairSet,
    lift: &Csr,
    options: &NewtonOptions,
) -> Result<MultiStep> {
    let m = prev.len();
    if m == 0 {
        return Err(Error::Domain("empty eigenpair set".into()));
    }
    let lifted: Vec<Vec<f64>> = prev
        .pairs
        .iter()
        .map(|p| self::lift(lift, forms_fine, &p.vector))
        .collect::<Result<_>>()?;
    let border: Vec<Vec<f64>> = lifted.iter().map(|u| forms_fine.mass.mul_vec(u)).collect();
    let symbolic = Symbolic::analyze(&forms_fine.stiffness);
    let bopts = bordered_options(forms_fine, options);

    let solves: Vec<Result<(Vec<f64>, Vec<f64>, f64)>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let lam = prev.pairs[i].value;
            let core = forms_fine.stiffness.add_scaled(1.0, &forms_fine.mass, -lam);
            let matrix = BorderedMatrix::new(core, border.clone())?;
            let rhs_top: Vec<f64> = border[i].iter().map(|v| -lam * v).collect();
            let mut rhs_bottom = vec![0.0; m];
            rhs_bottom[i] = 1.0;
            let sol = solve_bordered_with(&matrix, &rhs_top, &rhs_bottom, &bopts, Some(&symbolic))?;
            Ok((sol.w, sol.gamma, sol.residual))
        })
        .collect();

    let mut corrected = Vec::with_capacity(m);
    let mut multipliers = Vec::with_capacity(m);
    let mut residuals = Vec::with_capacity(m);
    let mut constraint_error: f64 = 0.0;
    for (i, s) in solves.into_iter().enumerate() {
        let (w, gamma, res) = s?;
        for (j, bj) in border.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            constraint_error = constraint_error.max((dot(&w, bj) - target).abs());
        }
        corrected.push(w);
        multipliers.push(gamma);
        residuals.push(res);
    }
    if constraint_error > options.constraint_tol {
        return Err(Error::LinearSolve {
            message: format!("constraint rows b(ũ_i, u_j) = δ_ij violated by {constraint_error:e}"),
            residual: residuals.iter().fold(0.0, |a: f64, &b| a.max(b)),
        });
    }

    let au: Vec<Vec<f64>> = corrected.iter().map(|u| forms_fine.stiffness.mul_vec(u)).collect();
    let bu: Vec<Vec<f64>> = corrected.iter().map(|u| forms_fine.mass.mul_vec(u)).collect();
    let ar = DMatrix::from_fn(m, m, |i, j| 0.5 * (dot(&corrected[i], &au[j]) + dot(&corrected[j], &au[i])));
    let br = DMatrix::from_fn(m, m, |i, j| 0.5 * (dot(&corrected[i], &bu[j]) + dot(&corrected[j], &bu[i])));
    let gram_condition = spd_condition(&br);
    if gram_condition > options.max_gram_condition {
        return Err(Error::Eigen(format!(
            "corrected vectors are nearly linearly dependent (Gram condition {gram_condition:e}); \
             use fewer eigenpairs or a finer coarse mesh"
        )));
    }
    let ritz = dense_gen_eig(&ar, &br)?;

    let level = prev.level() + 1;
    let n = forms_fine.n_free;
    let mut pairs = Vec::with_capacity(m);
    for k in 0..m {
        let mut x = vec![0.0; n];
        for (j, uj) in corrected.iter().enumerate() {
            crate::linalg::axpy(ritz.vectors[(j, k)], uj, &mut x);
        }
        b_normalize(forms_fine, &mut x)?;
        // orient each Ritz vector like the lifted iterate it replaces
        if dot(&x, &border[k]) < 0.0 {
            x.iter_mut().for_each(|v| *v = -*v);
        }
        let value = rayleigh_quotient(forms_fine, &x)?;
        pairs.push(Eigenpair {
            value,
            vector: x,
            level,
        });
    }
    // Rayleigh–Ritz output is ascending; keep the order stable for exact ties
    pairs.sort_by(|a, b| a.value.total_cmp(&b.value));

    let mut warnings = Vec::new();
    for (i, (p, q)) in pairs.iter().zip(&prev.pairs).enumerate() {
        if p.value > q.value * (1.0 + 1e-9) {
            let w = format!(
                "level {level}: eigenvalue {} rose from {} to {}; the coarse mesh may be too coarse",
                i + 1,
                q.value,
                p.value
            );
            log::warn!("{w}");
            warnings.push(w);
        }
    }
    Ok(MultiStep {
        set: EigenpairSet { pairs },
        multipliers,
        constraint_error,
        residuals,
        gram_condition,
        warnings,
    })
}

/// Residual of the exact expansion
/// `R(ψ) - λ̄ = a(e, e)/b(ψ, ψ) - λ̄ b(e, e)/b(ψ, ψ)` with `e = ū - ψ`,
/// valid for any nonzero `ψ` when `(λ̄, ū)` is an eigenpair of the pencil.
pub fn rayleigh_expansion_check(forms: &AssembledForms, psi: &[f64], exact: &Eigenpair) -> Result<f64> {
    let lam_hat = rayleigh_quotient(forms, psi)?;
    let e: Vec<f64> = exact.vector.iter().zip(psi).map(|(u, p)| u - p).collect();
    let bpsi = b_norm(forms, psi)?.powi(2);
    let lhs = lam_hat - exact.value;
    let rhs = forms.stiffness.quad_form(&e) / bpsi - exact.value * forms.mass.quad_form(&e) / bpsi;
    Ok((lhs - rhs).abs())
}
