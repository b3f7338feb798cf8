//! Saddle-point systems with a sparse symmetric core and a few dense border
//! columns:
//!
//! ```text
//! [ K    -C ] [ w ]   [ f ]
//! [ -Cᵀ   0 ] [ γ ] = [ -g ]
//! ```
//!
//! The direct backend factors `K` with sparse `LDLᵀ`, eliminates the border
//! through the dense `m × m` Schur complement `Cᵀ K⁻¹ C`, and polishes with
//! iterative refinement on the full system. Every returned solution has its
//! residual recomputed by explicit products.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::ldl::{LdlFactor, Symbolic};
use super::sparse::{axpy, dot, norm2, SparseSym};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BorderedMatrix {
    core: SparseSym,
    border: Vec<Vec<f64>>,
}

impl BorderedMatrix {
    pub fn new(core: SparseSym, border: Vec<Vec<f64>>) -> Result<Self> {
        if border.is_empty() {
            return Err(Error::Domain("bordered matrix needs at least one border column".into()));
        }
        for (s, col) in border.iter().enumerate() {
            if col.len() != core.dim() {
                return Err(Error::Domain(format!(
                    "border column {s} has length {}, core has dimension {}",
                    col.len(),
                    core.dim()
                )));
            }
            if col.iter().all(|&v| v == 0.0) {
                return Err(Error::Domain(format!("border column {s} is zero")));
            }
        }
        Ok(BorderedMatrix { core, border })
    }

    pub fn core(&self) -> &SparseSym {
        &self.core
    }

    pub fn border(&self) -> &[Vec<f64>] {
        &self.border
    }

    pub fn n(&self) -> usize {
        self.core.dim()
    }

    pub fn m(&self) -> usize {
        self.border.len()
    }

    /// Applies the full symmetric saddle-point matrix.
    pub fn apply(&self, w: &[f64], gamma: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut top = self.core.mul_vec(w);
        for (col, &g) in self.border.iter().zip(gamma) {
            axpy(-g, col, &mut top);
        }
        let bottom = self.border.iter().map(|col| -dot(col, w)).collect();
        (top, bottom)
    }

    /// Dense copy of the `(n + m) × (n + m)` system, for small checks.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let (n, m) = (self.n(), self.m());
        let mut d = DMatrix::zeros(n + m, n + m);
        d.view_mut((0, 0), (n, n)).copy_from(&self.core.to_dense());
        for (s, col) in self.border.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                d[(i, n + s)] = -v;
                d[(n + s, i)] = -v;
            }
        }
        d
    }

    /// Relative residual of `(w, γ)` for right-hand sides `(f, g)`.
    pub fn relative_residual(&self, w: &[f64], gamma: &[f64], f: &[f64], g: &[f64]) -> f64 {
        let (top, bottom) = self.apply(w, gamma);
        let r_top: f64 = top.iter().zip(f).map(|(a, b)| (a - b).powi(2)).sum();
        let r_bot: f64 = bottom.iter().zip(g).map(|(a, b)| (a + b).powi(2)).sum();
        let rhs = dot(f, f) + dot(g, g);
        if rhs == 0.0 {
            (r_top + r_bot).sqrt()
        } else {
            ((r_top + r_bot) / rhs).sqrt()
        }
    }
}

#[derive(Debug, Clone, Default)]
pub enum Backend {
    #[default]
    Direct,
    /// Preconditioned minimum-residual iteration. The block-diagonal
    /// preconditioner uses the given SPD matrix for the core block (its
    /// factorization is computed once per solve) or the core's absolute
    /// diagonal when none is supplied.
    Minres {
        preconditioner: Option<Arc<SparseSym>>,
        max_iter: usize,
    },
}

#[derive(Debug, Clone)]
pub struct BorderedOptions {
    pub tol: f64,
    pub backend: Backend,
    pub max_refinement: usize,
}

impl Default for BorderedOptions {
    fn default() -> Self {
        BorderedOptions {
            tol: 1e-10,
            backend: Backend::Direct,
            max_refinement: 4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BorderedSolution {
    pub w: Vec<f64>,
    pub gamma: Vec<f64>,
    /// Independently recomputed relative residual.
    pub residual: f64,
}

/// Factorization of a bordered matrix, reusable for several right-hand sides.
pub struct BorderedFactor<'a> {
    matrix: &'a BorderedMatrix,
    core: LdlFactor,
    z: Vec<Vec<f64>>,
    schur: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl<'a> BorderedFactor<'a> {
    pub fn new(matrix: &'a BorderedMatrix, symbolic: Option<&Symbolic>) -> Result<Self> {
        let core = match symbolic {
            Some(s) => s.factor(matrix.core())?,
            None => LdlFactor::new(matrix.core())?,
        };
        let z: Vec<Vec<f64>> = matrix.border.iter().map(|c| core.solve(c)).collect();
        let m = matrix.m();
        let s = DMatrix::from_fn(m, m, |i, j| dot(&matrix.border[i], &z[j]));
        let schur = s.lu();
        if !schur.is_invertible() {
            return Err(Error::LinearSolve {
                message: "border Schur complement is singular".into(),
                residual: f64::INFINITY,
            });
        }
        Ok(BorderedFactor {
            matrix,
            core,
            z,
            schur,
        })
    }

    fn apply_inverse(&self, f: &[f64], g: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let kf = self.core.solve(f);
        let m = self.matrix.m();
        let rhs = DVector::from_fn(m, |i, _| g[i] - dot(&self.matrix.border[i], &kf));
        let gamma = self
            .schur
            .solve(&rhs)
            .map(|v| v.iter().copied().collect::<Vec<_>>())
            .unwrap_or_else(|| vec![f64::NAN; m]);
        let mut w = kf;
        for (zj, &gj) in self.z.iter().zip(&gamma) {
            axpy(gj, zj, &mut w);
        }
        (w, gamma)
    }

    pub fn solve(&self, f: &[f64], g: &[f64], options: &BorderedOptions) -> Result<BorderedSolution> {
        let (mut w, mut gamma) = self.apply_inverse(f, g);
        let mut residual = self.matrix.relative_residual(&w, &gamma, f, g);
        for _ in 0..options.max_refinement {
            if residual <= 0.01 * options.tol || !residual.is_finite() {
                break;
            }
            let (top, bottom) = self.matrix.apply(&w, &gamma);
            let rf: Vec<f64> = f.iter().zip(&top).map(|(a, b)| a - b).collect();
            // bottom block of the system is -Cᵀw = -g, so the residual in g-form is bottom + g
            let rg: Vec<f64> = g.iter().zip(&bottom).map(|(a, b)| a + b).collect();
            let (dw, dg) = self.apply_inverse(&rf, &rg);
            axpy(1.0, &dw, &mut w);
            axpy(1.0, &dg, &mut gamma);
            let next = self.matrix.relative_residual(&w, &gamma, f, g);
            if next >= residual {
                residual = next;
                break;
            }
            residual = next;
        }
        finish(w, gamma, residual, options.tol)
    }
}

fn finish(w: Vec<f64>, gamma: Vec<f64>, residual: f64, tol: f64) -> Result<BorderedSolution> {
    if residual.is_finite() && residual <= tol {
        Ok(BorderedSolution { w, gamma, residual })
    } else {
        Err(Error::LinearSolve {
            message: "bordered system residual above tolerance \
                      (the coarse iterate may be outside the region where the system is well posed)"
                .into(),
            residual,
        })
    }
}

/// Solves the bordered system for `(rhs_top, rhs_bottom)`.
pub fn solve_bordered(
    matrix: &BorderedMatrix,
    rhs_top: &[f64],
    rhs_bottom: &[f64],
    options: &BorderedOptions,
) -> Result<BorderedSolution> {
    solve_bordered_with(matrix, rhs_top, rhs_bottom, options, None)
}

/// As [`solve_bordered`], reusing a symbolic analysis of the core pattern.
pub fn solve_bordered_with(
    matrix: &BorderedMatrix,
    rhs_top: &[f64],
    rhs_bottom: &[f64],
    options: &BorderedOptions,
    symbolic: Option<&Symbolic>,
) -> Result<BorderedSolution> {
    if rhs_top.len() != matrix.n() || rhs_bottom.len() != matrix.m() {
        return Err(Error::Domain(format!(
            "right-hand side lengths ({}, {}) do not match system ({}, {})",
            rhs_top.len(),
            rhs_bottom.len(),
            matrix.n(),
            matrix.m()
        )));
    }
    if rhs_top.iter().chain(rhs_bottom).all(|&v| v == 0.0) {
        return Ok(BorderedSolution {
            w: vec![0.0; matrix.n()],
            gamma: vec![0.0; matrix.m()],
            residual: 0.0,
        });
    }
    match &options.backend {
        Backend::Direct => BorderedFactor::new(matrix, symbolic)?.solve(rhs_top, rhs_bottom, options),
        Backend::Minres {
            preconditioner,
            max_iter,
        } => minres(matrix, rhs_top, rhs_bottom, options.tol, preconditioner.as_deref(), *max_iter),
    }
}

/// Block-diagonal SPD preconditioner `diag(P, S)` with `S ≈ Cᵀ P⁻¹ C`.
struct BlockPreconditioner {
    top: TopPrec,
    schur_inv: DMatrix<f64>,
}

enum TopPrec {
    Factor(LdlFactor),
    Diagonal(Vec<f64>),
}

impl TopPrec {
    fn apply(&self, r: &[f64]) -> Vec<f64> {
        match self {
            TopPrec::Factor(f) => f.solve(r),
            TopPrec::Diagonal(d) => r.iter().zip(d).map(|(a, b)| a / b).collect(),
        }
    }
}

impl BlockPreconditioner {
    fn new(matrix: &BorderedMatrix, spd: Option<&SparseSym>) -> Result<Self> {
        let top = match spd {
            Some(p) => TopPrec::Factor(LdlFactor::new(p)?),
            None => {
                let d: Vec<f64> = matrix
                    .core
                    .csr()
                    .diagonal()
                    .iter()
                    .map(|v| if v.abs() > 0.0 { v.abs() } else { 1.0 })
                    .collect();
                TopPrec::Diagonal(d)
            }
        };
        let pc: Vec<Vec<f64>> = matrix.border.iter().map(|c| top.apply(c)).collect();
        let m = matrix.m();
        let s = DMatrix::from_fn(m, m, |i, j| dot(&matrix.border[i], &pc[j]));
        let schur_inv = s.try_inverse().ok_or_else(|| Error::LinearSolve {
            message: "preconditioner Schur block is singular".into(),
            residual: f64::INFINITY,
        })?;
        Ok(BlockPreconditioner { top, schur_inv })
    }

    fn apply(&self, top: &[f64], bottom: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let t = self.top.apply(top);
        let b = &self.schur_inv * DVector::from_column_slice(bottom);
        (t, b.iter().copied().collect())
    }
}

struct Block {
    top: Vec<f64>,
    bot: Vec<f64>,
}

impl Block {
    fn zeros(n: usize, m: usize) -> Self {
        Block {
            top: vec![0.0; n],
            bot: vec![0.0; m],
        }
    }
    fn dot(&self, other: &Block) -> f64 {
        dot(&self.top, &other.top) + dot(&self.bot, &other.bot)
    }
    fn lin(a: f64, x: &Block, b: f64, y: &Block) -> Block {
        Block {
            top: x.top.iter().zip(&y.top).map(|(p, q)| a * p + b * q).collect(),
            bot: x.bot.iter().zip(&y.bot).map(|(p, q)| a * p + b * q).collect(),
        }
    }
    fn scale(&mut self, s: f64) {
        self.top.iter_mut().chain(self.bot.iter_mut()).for_each(|v| *v *= s);
    }
}

/// Preconditioned MINRES (Paige–Saunders recurrences).
fn minres(
    matrix: &BorderedMatrix,
    f: &[f64],
    g: &[f64],
    tol: f64,
    spd: Option<&SparseSym>,
    max_iter: usize,
) -> Result<BorderedSolution> {
    let (n, m) = (matrix.n(), matrix.m());
    let prec = BlockPreconditioner::new(matrix, spd)?;
    let op = |x: &Block| {
        let (t, b) = matrix.apply(&x.top, &x.bot);
        Block { top: t, bot: b }
    };
    let pinv = |x: &Block| {
        let (t, b) = prec.apply(&x.top, &x.bot);
        Block { top: t, bot: b }
    };
    let rhs = Block {
        top: f.to_vec(),
        bot: g.iter().map(|v| -v).collect(),
    };

    let mut x = Block::zeros(n, m);
    let mut r1 = Block { top: rhs.top.clone(), bot: rhs.bot.clone() };
    let mut y = pinv(&r1);
    let mut beta1 = r1.dot(&y);
    if beta1 <= 0.0 {
        return Err(Error::LinearSolve {
            message: "preconditioner is not positive definite".into(),
            residual: f64::INFINITY,
        });
    }
    beta1 = beta1.sqrt();
    let mut r2 = Block { top: r1.top.clone(), bot: r1.bot.clone() };
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln) = (0.0, 0.0);
    let (mut phibar, mut cs, mut sn) = (beta1, -1.0f64, 0.0f64);
    let mut w = Block::zeros(n, m);
    let mut w2 = Block::zeros(n, m);
    let mut residual = 1.0;

    for it in 0..max_iter {
        let s = 1.0 / beta;
        let mut v = Block { top: y.top.clone(), bot: y.bot.clone() };
        v.scale(s);
        let mut yy = op(&v);
        if it > 0 {
            yy = Block::lin(1.0, &yy, -beta / oldb, &r1);
        }
        let alfa = v.dot(&yy);
        yy = Block::lin(1.0, &yy, -alfa / beta, &r2);
        r1 = r2;
        r2 = yy;
        y = pinv(&r2);
        oldb = beta;
        let b2 = r2.dot(&y);
        beta = if b2 > 0.0 { b2.sqrt() } else { 0.0 };

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::MIN_POSITIVE);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        let w1 = w2;
        w2 = w;
        // w = (v - oldeps*w1 - delta*w2) / gamma
        let mut wn = Block::lin(1.0, &v, -oldeps, &w1);
        wn = Block::lin(1.0, &wn, -delta, &w2);
        wn.scale(1.0 / gamma);
        w = wn;
        x = Block::lin(1.0, &x, phi, &w);

        if phibar / beta1 <= 0.1 * tol || beta == 0.0 {
            residual = matrix.relative_residual(&x.top, &x.bot, f, g);
            if residual <= tol || beta == 0.0 {
                break;
            }
        }
        if it + 1 == max_iter {
            residual = matrix.relative_residual(&x.top, &x.bot, f, g);
        }
    }
    finish(x.top, x.bot, residual, tol)
}

/// Solves `M x = rhs` for symmetric positive definite `M`.
pub fn solve_spd(matrix: &SparseSym, rhs: &[f64], tol: f64) -> Result<Vec<f64>> {
    const MAX_REFINEMENT: usize = 8;
    let factor = LdlFactor::new(matrix)?;
    if factor.inertia_negative() > 0 {
        return Err(Error::LinearSolve {
            message: "matrix is not positive definite (negative pivot)".into(),
            residual: f64::INFINITY,
        });
    }
    let bnorm = norm2(rhs);
    if bnorm == 0.0 {
        return Ok(vec![0.0; rhs.len()]);
    }
    let mut x = factor.solve(rhs);
    let mut residual = f64::INFINITY;
    for _ in 0..=MAX_REFINEMENT {
        let r: Vec<f64> = rhs.iter().zip(matrix.mul_vec(&x)).map(|(b, ax)| b - ax).collect();
        residual = norm2(&r) / bnorm;
        if residual <= tol {
            return Ok(x);
        }
        axpy(1.0, &factor.solve(&r), &mut x);
    }
    Err(Error::LinearSolve {
        message: format!("no convergence after {MAX_REFINEMENT} refinement iterations"),
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_solved_three_by_three() {
        let m = BorderedMatrix::new(SparseSym::identity(2), vec![vec![1.0, 0.0]]).unwrap();
        let s = solve_bordered(&m, &[0.0, 0.0], &[1.0], &BorderedOptions::default()).unwrap();
        assert!((s.w[0] - 1.0).abs() < 1e-14 && s.w[1].abs() < 1e-14);
        assert!((s.gamma[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let m = BorderedMatrix::new(SparseSym::identity(3), vec![vec![1.0, 2.0, 0.0]]).unwrap();
        let s = solve_bordered(&m, &[0.0; 3], &[0.0], &BorderedOptions::default()).unwrap();
        assert!(s.w.iter().chain(&s.gamma).all(|&v| v == 0.0));
    }

    #[test]
    fn zero_border_rejected() {
        assert!(BorderedMatrix::new(SparseSym::identity(2), vec![vec![0.0, 0.0]]).is_err());
        assert!(BorderedMatrix::new(SparseSym::identity(2), vec![vec![1.0]]).is_err());
        assert!(BorderedMatrix::new(SparseSym::identity(2), vec![]).is_err());
    }

    #[test]
    fn minres_matches_direct_on_small_indefinite_core() {
        let core = SparseSym::from_diagonal(&[1.0, 2.0, -0.5, 4.0]);
        let m = BorderedMatrix::new(core, vec![vec![1.0, 1.0, 1.0, 1.0]]).unwrap();
        let f = [1.0, 0.0, 2.0, -1.0];
        let g = [0.5];
        let direct = solve_bordered(&m, &f, &g, &BorderedOptions::default()).unwrap();
        let opts = BorderedOptions {
            backend: Backend::Minres {
                preconditioner: None,
                max_iter: 100,
            },
            ..Default::default()
        };
        let it = solve_bordered(&m, &f, &g, &opts).unwrap();
        for (a, b) in direct.w.iter().zip(&it.w) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn spd_identity_and_diagonal() {
        let b = [3.0, -1.0, 2.0];
        assert_eq!(solve_spd(&SparseSym::identity(3), &b, 1e-12).unwrap(), b.to_vec());
        let d: Vec<f64> = (1..=10).map(f64::from).collect();
        let x = solve_spd(&SparseSym::from_diagonal(&d), &[1.0; 10], 1e-12).unwrap();
        for (i, xi) in x.iter().enumerate() {
            assert!((xi - 1.0 / (i + 1) as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn spd_rejects_indefinite() {
        assert!(solve_spd(&SparseSym::from_diagonal(&[1.0, -1.0]), &[1.0, 1.0], 1e-10).is_err());
    }
}
