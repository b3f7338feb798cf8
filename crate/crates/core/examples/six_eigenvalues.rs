//! The six lowest Laplace eigenvalues with one block Newton step per level.
//!
//! ```bash
//! cargo run --release --example six_eigenvalues
//! ```

use mlnewton::assemble::CoefficientSet;
use mlnewton::mesh::{build_hierarchy, unit_square_mesh};
use mlnewton::multilevel::{run_multilevel, MultilevelOptions, Reference};
use mlnewton::reference::exact_laplace;

fn main() -> mlnewton::Result<()> {
    let exact = exact_laplace(6)?;
    let hierarchy = build_hierarchy(unit_square_mesh(1.0 / 6.0)?, 4)?;
    let options = MultilevelOptions {
        reference: Reference::Exact(exact.clone()),
        ..Default::default()
    };
    let record = run_multilevel(&hierarchy, &CoefficientSet::laplace(), 6, &options)?;

    for r in &record.levels {
        let errs: Vec<String> = r.eigenvalue_errors.iter().map(|e| format!("{:.3e}", e.unwrap())).collect();
        println!("level {} (N = {:>5}): {}", r.level, r.n_free, errs.join("  "));
    }
    println!();
    for (i, e) in exact.iter().enumerate() {
        println!(
            "lambda_{} ~ {:>14.10}  exact ({},{}) {:>14.10}  order {:.3}",
            i + 1,
            record.final_set.pairs[i].value,
            e.p,
            e.q,
            e.value,
            record.observed_orders[i].unwrap()
        );
    }
    Ok(())
}
