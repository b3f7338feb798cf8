//! Builds a nested hierarchy, checks the prolongation on an affine function
//! and round-trips the coarse mesh through the text format.
//!
//! ```bash
//! cargo run --release --example mesh_hierarchy
//! ```

use mlnewton::assemble::interpolate_full;
use mlnewton::mesh::{build_hierarchy, mesh_to_string, parse_mesh, unit_square_mesh};

fn main() -> mlnewton::Result<()> {
    let hierarchy = build_hierarchy(unit_square_mesh(0.5)?, 4)?;
    for (k, mesh) in hierarchy.levels().iter().enumerate() {
        println!(
            "level {}: {:>5} vertices {:>5} triangles {:>4} boundary  h = {:.5}",
            k + 1,
            mesh.n_vertices(),
            mesh.n_triangles(),
            mesh.n_boundary(),
            mesh.h()
        );
    }

    let f = |p: [f64; 2]| 3.0 * p[0] - 2.0 * p[1] + 0.5;
    let mut worst: f64 = 0.0;
    for k in 0..hierarchy.n_levels() - 1 {
        let lifted = hierarchy.prolongation(k).apply(&interpolate_full(f, hierarchy.level(k)));
        let direct = interpolate_full(f, hierarchy.level(k + 1));
        for (a, b) in lifted.iter().zip(&direct) {
            worst = worst.max((a - b).abs());
        }
    }
    println!("affine prolongation error: {worst:e}");

    let text = mesh_to_string(hierarchy.level(0));
    let back = parse_mesh(&text, std::path::Path::new("<memory>"))?;
    println!("round trip identical: {}", &back == hierarchy.level(0));
    print!("{text}");
    Ok(())
}
