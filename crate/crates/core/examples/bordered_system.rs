//! Solves a small bordered saddle-point system with the direct and the
//! MINRES backends and checks both against a dense solve.
//!
//! ```bash
//! cargo run --release --example bordered_system
//! ```

use mlnewton::assemble::{assemble_forms, CoefficientSet};
use mlnewton::eigen_newton::coarse_solve;
use mlnewton::linalg::{solve_bordered, Backend, BorderedMatrix, BorderedOptions};
use mlnewton::mesh::unit_square_mesh;

fn main() -> mlnewton::Result<()> {
    let forms = assemble_forms(&unit_square_mesh(1.0 / 8.0)?, &CoefficientSet::laplace(), 2)?;
    let pairs = coarse_solve(&forms, 2)?;
    // shift slightly away from the first eigenvalue, as a Newton step would
    let mu = 1.01 * pairs.pairs[0].value;
    let core = forms.stiffness.add_scaled(1.0, &forms.mass, -mu);
    let border: Vec<Vec<f64>> = pairs.pairs.iter().map(|p| forms.mass.mul_vec(&p.vector)).collect();
    let matrix = BorderedMatrix::new(core, border)?;

    let f: Vec<f64> = (0..matrix.n()).map(|i| ((i * 7) % 11) as f64 - 5.0).collect();
    let g = vec![1.0, -0.5];

    let dense = {
        let a = matrix.to_dense();
        let mut rhs = nalgebra::DVector::from_iterator(matrix.n() + 2, f.iter().copied().chain(g.iter().map(|v| -v)));
        a.lu().solve_mut(&mut rhs);
        rhs
    };
    for (name, backend) in [
        ("direct", Backend::Direct),
        ("minres", Backend::Minres { preconditioner: None, max_iter: 2000 }),
    ] {
        let opts = BorderedOptions { backend, ..Default::default() };
        let sol = solve_bordered(&matrix, &f, &g, &opts)?;
        let diff = sol
            .w
            .iter()
            .chain(&sol.gamma)
            .zip(dense.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        println!("{name:>6}: residual {:.3e}, max diff to dense {:.3e}, gamma = {:?}", sol.residual, diff, sol.gamma);
    }
    Ok(())
}
