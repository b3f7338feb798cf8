//! Dense generalized symmetric eigenproblems `A v = λ B v`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Eigenvalues ascending with `B`-orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct GenEig {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// Solves the pencil by Cholesky reduction `B = L Lᵀ`, a symmetric
/// eigensolve of `L⁻¹ A L⁻ᵀ`, and back-transformation.
pub fn dense_gen_eig(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<GenEig> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || b.ncols() != n {
        return Err(Error::Domain(format!(
            "pencil shapes {}x{} and {}x{} do not match",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    if n == 0 {
        return Ok(GenEig {
            values: Vec::new(),
            vectors: DMatrix::zeros(0, 0),
        });
    }
    let bsym = (b + b.transpose()) * 0.5;
    let chol = bsym.cholesky().ok_or_else(|| {
        Error::Eigen("right-hand matrix of the pencil is not positive definite".into())
    })?;
    let l = chol.l();
    let asym = (a + a.transpose()) * 0.5;
    // C = L⁻¹ A L⁻ᵀ
    let y = l
        .solve_lower_triangular(&asym)
        .ok_or_else(|| Error::Eigen("singular Cholesky factor".into()))?;
    let c = l
        .solve_lower_triangular(&y.transpose())
        .ok_or_else(|| Error::Eigen("singular Cholesky factor".into()))?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let w = DMatrix::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])]);
    let vectors = l
        .transpose()
        .solve_upper_triangular(&w)
        .ok_or_else(|| Error::Eigen("singular Cholesky factor".into()))?;
    Ok(GenEig { values, vectors })
}

/// Ratio of extreme eigenvalues of a symmetric positive semidefinite matrix.
pub fn spd_condition(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    let ev = SymmetricEigen::new(sym).eigenvalues;
    let (lo, hi) = ev
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn diagonal_pencil() {
        let a = dmatrix![4.0, 0.0; 0.0, 2.0];
        let e = dense_gen_eig(&a, &DMatrix::identity(2, 2)).unwrap();
        assert_eq!(e.values, vec![2.0, 4.0]);
        assert!((e.vectors[(1, 0)].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identical_pencil_has_unit_spectrum() {
        let b = dmatrix![4.0, 1.0, 0.5; 1.0, 3.0, 0.2; 0.5, 0.2, 2.0];
        let e = dense_gen_eig(&b, &b).unwrap();
        for v in e.values {
            assert!((v - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn indefinite_mass_rejected() {
        let b = dmatrix![1.0, 2.0; 2.0, 1.0];
        assert!(dense_gen_eig(&DMatrix::identity(2, 2), &b).is_err());
    }
}
