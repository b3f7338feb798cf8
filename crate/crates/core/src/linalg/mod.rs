//! Sparse symmetric storage, direct and iterative solvers for bordered
//! systems, and dense generalized eigensolves.

mod bordered;
mod dense;
mod ldl;
mod ordering;
mod sparse;

pub use bordered::{
    solve_bordered, solve_bordered_with, solve_spd, Backend, BorderedFactor, BorderedMatrix,
    BorderedOptions, BorderedSolution,
};
pub use dense::{dense_gen_eig, spd_condition, GenEig};
pub use ldl::{LdlFactor, Symbolic};
pub use ordering::{inverse_permutation, nested_dissection};
pub use sparse::{axpy, dot, norm2, Csr, SparseSym, SYMMETRY_TOL};
