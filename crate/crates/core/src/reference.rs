//! Oracles for the multilevel scheme: a direct sparse eigensolver on one
//! level, the exact Laplace eigenpairs of the unit square, and Richardson
//! extrapolation.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assemble::AssembledForms;
use crate::eigen_newton::{pairs_from_columns, EigenpairSet};
use crate::error::{Error, Result};
use crate::linalg::{dense_gen_eig, dot, LdlFactor};
use crate::mesh::Point;

#[derive(Debug, Clone)]
pub struct DirectOptions {
    /// Stop once every wanted Ritz value changes by less than this, relative.
    pub tol: f64,
    /// Required relative residual `‖Ax - λBx‖ / (λ ‖Bx‖)` at convergence.
    pub residual_tol: f64,
    pub max_iter: usize,
    /// Pencils with fewer free DOFs are solved densely.
    pub dense_fallback_below: usize,
    pub seed: u64,
}

impl Default for DirectOptions {
    fn default() -> Self {
        DirectOptions {
            tol: 1e-12,
            residual_tol: 1e-8,
            max_iter: 500,
            dense_fallback_below: 300,
            seed: 0x5eed,
        }
    }
}

/// Lowest `m` eigenpairs of the pencil by shift-invert block subspace
/// iteration (shift 0) with Rayleigh–Ritz.
pub fn direct_solve(forms: &AssembledForms, m: usize) -> Result<EigenpairSet> {
    direct_solve_with(forms, m, &DirectOptions::default())
}

pub fn direct_solve_with(forms: &AssembledForms, m: usize, options: &DirectOptions) -> Result<EigenpairSet> {
    let n = forms.n_free;
    if m == 0 || m > n {
        return Err(Error::Domain(format!(
            "cannot compute {m} eigenpairs of a pencil with {n} free DOFs"
        )));
    }
    if n < options.dense_fallback_below {
        let eig = dense_gen_eig(&forms.stiffness.to_dense(), &forms.mass.to_dense())?;
        return pairs_from_columns(forms, &eig.values, &eig.vectors, m, 0);
    }

    let p = (m + m.max(2)).min(n);
    let factor = LdlFactor::new(&forms.stiffness)?;
    if factor.inertia_negative() > 0 {
        return Err(Error::Eigen("stiffness matrix is not positive definite".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut x: Vec<Vec<f64>> = (0..p)
        .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();

    let mut previous: Option<Vec<f64>> = None;
    let mut residuals = vec![f64::INFINITY; m];
    for _ in 0..options.max_iter {
        let y: Vec<Vec<f64>> = x.iter().map(|xi| factor.solve(&forms.mass.mul_vec(xi))).collect();
        let ay: Vec<Vec<f64>> = y.iter().map(|v| forms.stiffness.mul_vec(v)).collect();
        let by: Vec<Vec<f64>> = y.iter().map(|v| forms.mass.mul_vec(v)).collect();
        let ar = DMatrix::from_fn(p, p, |i, j| 0.5 * (dot(&y[i], &ay[j]) + dot(&y[j], &ay[i])));
        let br = DMatrix::from_fn(p, p, |i, j| 0.5 * (dot(&y[i], &by[j]) + dot(&y[j], &by[i])));
        let ritz = dense_gen_eig(&ar, &br)?;

        let combine = |vs: &[Vec<f64>], k: usize| -> Vec<f64> {
            let mut out = vec![0.0; n];
            for (j, v) in vs.iter().enumerate() {
                crate::linalg::axpy(ritz.vectors[(j, k)], v, &mut out);
            }
            out
        };
        x = (0..p).map(|k| combine(&y, k)).collect();

        let values = ritz.values[..m].to_vec();
        let converged = previous.as_ref().is_some_and(|prev| {
            prev.iter()
                .zip(&values)
                .all(|(a, b)| (a - b).abs() <= options.tol * b.abs())
        });
        if converged {
            for k in 0..m {
                let ax = combine(&ay, k);
                let bx = combine(&by, k);
                let r: f64 = ax
                    .iter()
                    .zip(&bx)
                    .map(|(a, b)| (a - values[k] * b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let scale = values[k].abs() * dot(&bx, &bx).sqrt();
                residuals[k] = r / scale;
            }
            if residuals.iter().all(|&r| r <= options.residual_tol) {
                let cols = DMatrix::from_fn(n, m, |i, k| x[k][i]);
                return pairs_from_columns(forms, &values, &cols, m, 0);
            }
        }
        previous = Some(values);
    }
    Err(Error::Eigen(format!(
        "subspace iteration did not converge in {} iterations (residuals {:?})",
        options.max_iter, residuals
    )))
}

/// Eigenpair `((p² + q²)π², 2 sin(pπx) sin(qπy))` of the Dirichlet Laplacian
/// on the unit square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactEigen {
    pub p: u32,
    pub q: u32,
    pub value: f64,
}

impl ExactEigen {
    pub fn new(p: u32, q: u32) -> Self {
        ExactEigen {
            p,
            q,
            value: f64::from(p * p + q * q) * PI * PI,
        }
    }

    pub fn u(&self, x: Point) -> f64 {
        let (a, b) = (f64::from(self.p) * PI, f64::from(self.q) * PI);
        2.0 * (a * x[0]).sin() * (b * x[1]).sin()
    }

    pub fn grad(&self, x: Point) -> [f64; 2] {
        let (a, b) = (f64::from(self.p) * PI, f64::from(self.q) * PI);
        [
            2.0 * a * (a * x[0]).cos() * (b * x[1]).sin(),
            2.0 * b * (a * x[0]).sin() * (b * x[1]).cos(),
        ]
    }
}

/// First `m ≤ 20` exact eigenpairs with multiplicity, ties ordered `p < q` first.
pub fn exact_laplace(m: usize) -> Result<Vec<ExactEigen>> {
    if m > 20 {
        return Err(Error::Domain(format!("exact_laplace supports at most 20 values, got {m}")));
    }
    let mut all: Vec<ExactEigen> = (1..=8)
        .flat_map(|p| (1..=8).map(move |q| ExactEigen::new(p, q)))
        .collect();
    all.sort_by_key(|e| (e.p * e.p + e.q * e.q, e.p));
    all.truncate(m);
    Ok(all)
}

/// Order-2 Richardson extrapolation from mesh sizes `h` and `h/2`.
pub fn richardson(lambda_h: f64, lambda_h2: f64) -> f64 {
    (4.0 * lambda_h2 - lambda_h) / 3.0
}
