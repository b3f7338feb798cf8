//! Sparse `LDLᵀ` factorization without pivoting, after a symmetric
//! fill-reducing permutation.
//!
//! Up-looking row algorithm: row `k` of `L` is the solution of a sparse
//! triangular system whose pattern is the row's reach in the elimination
//! tree. Works for quasi-definite and mildly indefinite matrices as long as no
//! pivot vanishes; callers verify residuals.

use super::ordering::{inverse_permutation, nested_dissection};
use super::sparse::{Csr, SparseSym};
use crate::error::{Error, Result};

const NONE: usize = usize::MAX;

/// Ordering, elimination tree and column counts; reusable for any matrix
/// with the same pattern.
#[derive(Debug, Clone)]
pub struct Symbolic {
    n: usize,
    perm: Vec<usize>,
    inv_perm: Vec<usize>,
    parent: Vec<usize>,
    col_ptr: Vec<usize>,
    /// Permuted upper triangle pattern; row `k` lists rows `i <= k` of column `k`.
    upper: Csr,
}

#[derive(Debug, Clone)]
pub struct LdlFactor {
    symbolic: Symbolic,
    row_idx: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
}

impl Symbolic {
    pub fn analyze(matrix: &SparseSym) -> Symbolic {
        let perm = nested_dissection(matrix.csr());
        Symbolic::with_permutation(matrix, perm)
    }

    pub fn with_permutation(matrix: &SparseSym, perm: Vec<usize>) -> Symbolic {
        let n = matrix.dim();
        let inv_perm = inverse_permutation(&perm);
        let upper = permuted_upper(matrix.csr(), &perm, &inv_perm);

        let mut parent = vec![NONE; n];
        let mut flag = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            for (i, _) in upper.row(k) {
                let mut i = i;
                if i >= k {
                    continue;
                }
                while flag[i] != k {
                    if parent[i] == NONE {
                        parent[i] = k;
                    }
                    lnz[i] += 1;
                    flag[i] = k;
                    i = parent[i];
                }
            }
        }
        let mut col_ptr = vec![0usize; n + 1];
        for k in 0..n {
            col_ptr[k + 1] = col_ptr[k] + lnz[k];
        }
        Symbolic {
            n,
            perm,
            inv_perm,
            parent,
            col_ptr,
            upper,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Nonzeros of the strictly lower factor.
    pub fn factor_nnz(&self) -> usize {
        self.col_ptr[self.n]
    }

    pub fn factor(&self, matrix: &SparseSym) -> Result<LdlFactor> {
        let n = self.n;
        if matrix.dim() != n {
            return Err(Error::Domain(format!(
                "matrix dimension {} does not match analysis of dimension {n}",
                matrix.dim()
            )));
        }
        let upper = permuted_upper(matrix.csr(), &self.perm, &self.inv_perm);
        if upper.row_ptr() != self.upper.row_ptr() || upper.col_idx() != self.upper.col_idx() {
            return Err(Error::Domain(
                "matrix pattern differs from the analysed pattern".into(),
            ));
        }

        let nnz = self.factor_nnz();
        let mut row_idx = vec![0usize; nnz];
        let mut lx = vec![0.0; nnz];
        let mut d = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut pattern = vec![0usize; n];
        let mut flag = vec![NONE; n];
        let mut lnz = vec![0usize; n];

        for k in 0..n {
            let mut top = n;
            flag[k] = k;
            for (i, v) in upper.row(k) {
                y[i] += v;
                let mut i = i;
                let mut len = 0;
                while flag[i] != k {
                    pattern[len] = i;
                    len += 1;
                    flag[i] = k;
                    i = self.parent[i];
                }
                while len > 0 {
                    top -= 1;
                    len -= 1;
                    pattern[top] = pattern[len];
                }
            }
            d[k] = y[k];
            y[k] = 0.0;
            for &i in &pattern[top..n] {
                let yi = y[i];
                y[i] = 0.0;
                let start = self.col_ptr[i];
                let end = start + lnz[i];
                for p in start..end {
                    y[row_idx[p]] -= lx[p] * yi;
                }
                let l_ki = yi / d[i];
                d[k] -= l_ki * yi;
                row_idx[end] = k;
                lx[end] = l_ki;
                lnz[i] += 1;
            }
            if !d[k].is_finite() || d[k] == 0.0 {
                return Err(Error::LinearSolve {
                    message: format!("zero pivot at step {k} of {n} in LDLᵀ factorization"),
                    residual: f64::INFINITY,
                });
            }
        }

        Ok(LdlFactor {
            symbolic: self.clone(),
            row_idx,
            lx,
            d,
        })
    }
}

fn permuted_upper(matrix: &Csr, perm: &[usize], inv_perm: &[usize]) -> Csr {
    let n = matrix.nrows();
    let mut trip = Vec::with_capacity(matrix.nnz() / 2 + n);
    for new_r in 0..n {
        let old_r = perm[new_r];
        for (old_c, v) in matrix.row(old_r) {
            let new_c = inv_perm[old_c];
            // column `new_r` of the upper triangle holds rows `new_c <= new_r`
            if new_c <= new_r {
                trip.push((new_r, new_c, v));
            }
        }
    }
    Csr::from_triplets(n, n, &trip)
}

impl LdlFactor {
    pub fn new(matrix: &SparseSym) -> Result<Self> {
        Symbolic::analyze(matrix).factor(matrix)
    }

    pub fn dim(&self) -> usize {
        self.symbolic.n
    }

    /// Number of negative pivots, equal to the number of negative eigenvalues.
    pub fn inertia_negative(&self) -> usize {
        self.d.iter().filter(|&&d| d < 0.0).count()
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let s = &self.symbolic;
        let n = s.n;
        assert_eq!(rhs.len(), n, "rhs length");
        let mut x: Vec<f64> = s.perm.iter().map(|&old| rhs[old]).collect();
        for j in 0..n {
            let xj = x[j];
            if xj != 0.0 {
                for p in s.col_ptr[j]..s.col_ptr[j + 1] {
                    x[self.row_idx[p]] -= self.lx[p] * xj;
                }
            }
        }
        for (xj, dj) in x.iter_mut().zip(&self.d) {
            *xj /= dj;
        }
        for j in (0..n).rev() {
            let mut acc = x[j];
            for p in s.col_ptr[j]..s.col_ptr[j + 1] {
                acc -= self.lx[p] * x[self.row_idx[p]];
            }
            x[j] = acc;
        }
        let mut out = vec![0.0; n];
        for (new, &old) in s.perm.iter().enumerate() {
            out[old] = x[new];
        }
        out
    }
}
