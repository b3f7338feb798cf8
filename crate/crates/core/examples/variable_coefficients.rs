//! Variable diffusion, reaction and weight, compared with direct solves.
//!
//! With `s = x₁ - ½` and `t = x₂ - ½` the problem is
//! `-∇·𝒜∇u + exp(st) u = λ (1 + st) u` with `𝒜 = [[1 + s², st], [st, 1 + t²]]`.
//! No exact eigenvalues are known, so errors are taken against Richardson
//! extrapolation of the two finest direct solves.
//!
//! ```bash
//! cargo run --release --example variable_coefficients
//! ```

use mlnewton::assemble::CoefficientSet;
use mlnewton::mesh::{build_hierarchy, unit_square_mesh};
use mlnewton::multilevel::{compare_with_direct, MultilevelOptions, Reference};

fn main() -> mlnewton::Result<()> {
    let hierarchy = build_hierarchy(unit_square_mesh(1.0 / 6.0)?, 4)?;
    let options = MultilevelOptions {
        quad_order: 5,
        reference: Reference::Extrapolated,
        ..Default::default()
    };
    let cmp = compare_with_direct(&hierarchy, &CoefficientSet::example2(), 6, &options)?;
    let rec = &cmp.multilevel;
    let reference = rec.reference_values.as_ref().expect("extrapolated reference");

    for (r, d) in rec.levels.iter().zip(&cmp.direct) {
        let rel: Vec<String> = d
            .value_diffs
            .iter()
            .zip(&d.direct_values)
            .map(|(diff, l)| format!("{:.2e}", diff / l))
            .collect();
        println!("level {} (N = {:>5}) |ml - dir|/dir: {}", r.level, r.n_free, rel.join(" "));
    }
    println!();
    for i in 0..6 {
        println!(
            "lambda_{} ~ {:>14.10}  extrapolated {:>14.10}  order {:.3}",
            i + 1,
            rec.final_set.pairs[i].value,
            reference[i],
            rec.observed_orders[i].unwrap()
        );
    }
    Ok(())
}
