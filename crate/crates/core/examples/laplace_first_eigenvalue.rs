//! First Dirichlet eigenvalue of the Laplacian on the unit square.
//!
//! Starts from a structured H = 1/6 mesh, refines three times and takes one
//! Newton step per refinement. Errors are measured against the exact pair
//! `(2π², 2 sin(πx) sin(πy))`.
//!
//! ```bash
//! cargo run --release --example laplace_first_eigenvalue
//! ```

use mlnewton::assemble::CoefficientSet;
use mlnewton::mesh::{build_hierarchy, unit_square_mesh};
use mlnewton::multilevel::{run_multilevel, MultilevelOptions, Reference};
use mlnewton::reference::exact_laplace;

fn main() -> mlnewton::Result<()> {
    let hierarchy = build_hierarchy(unit_square_mesh(1.0 / 6.0)?, 4)?;
    let options = MultilevelOptions {
        reference: Reference::Exact(exact_laplace(1)?),
        ..Default::default()
    };
    let record = run_multilevel(&hierarchy, &CoefficientSet::laplace(), 1, &options)?;

    println!("{:>5} {:>10} {:>8} {:>18} {:>12} {:>12}", "level", "h", "N", "lambda", "|err|", "energy err");
    for r in &record.levels {
        println!(
            "{:>5} {:>10.6} {:>8} {:>18.12} {:>12.4e} {:>12.4e}",
            r.level,
            r.h,
            r.n_free,
            r.eigenvalues[0],
            r.eigenvalue_errors[0].unwrap(),
            r.energy_errors[0].unwrap()
        );
    }
    println!("eigenvalue order: {:.3}", record.observed_orders[0].unwrap());
    println!("energy order:     {:.3}", record.energy_orders[0].unwrap());
    Ok(())
}
