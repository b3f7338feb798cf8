//! Per-level quadratic contraction of a single Newton step.
//!
//! On each level the exact discrete eigenvector `ū` comes from a direct
//! solve. The step maps the lifted iterate `u_prev` to `u_new`, and the
//! printed ratio is `‖ū - u_new‖_a / ‖ū - u_prev‖_a²`.
//!
//! ```bash
//! cargo run --release --example newton_contraction
//! ```

use mlnewton::assemble::{aligned_energy_distance, CoefficientSet};
use mlnewton::eigen_newton::{coarse_solve, newton_step_single, NewtonOptions};
use mlnewton::mesh::{build_hierarchy, unit_square_mesh};
use mlnewton::multilevel::assemble_levels;
use mlnewton::reference::direct_solve;

fn main() -> mlnewton::Result<()> {
    let hierarchy = build_hierarchy(unit_square_mesh(1.0 / 6.0)?, 5)?;
    let levels = assemble_levels(&hierarchy, &CoefficientSet::laplace(), 2)?;
    let mut pair = coarse_solve(&levels.forms[0], 1)?.pairs.remove(0);

    println!("{:>5} {:>8} {:>14} {:>14} {:>12}", "level", "N", "before", "after", "ratio");
    for k in 1..levels.forms.len() {
        let forms = &levels.forms[k];
        let lift = &levels.lifts[k - 1];
        let exact = direct_solve(forms, 1)?.pairs.remove(0);
        let before = aligned_energy_distance(forms, &exact.vector, &lift.mul_vec(&pair.vector))?;
        let step = newton_step_single(forms, &pair, lift, &NewtonOptions::default())?;
        let after = aligned_energy_distance(forms, &exact.vector, &step.pair.vector)?;
        println!(
            "{:>5} {:>8} {:>14.6e} {:>14.6e} {:>12.4e}",
            k + 1,
            forms.n_free,
            before,
            after,
            after / (before * before)
        );
        pair = step.pair;
    }
    Ok(())
}
