//! Times the scheme with 2..6 levels on the same coarse mesh and fits the
//! total work against the finest dimension.
//!
//! ```bash
//! cargo run --release --example work_scaling
//! ```

use mlnewton::cli::cmd_bench;
use mlnewton::config::RunConfig;

fn main() -> mlnewton::Result<()> {
    let dir = std::env::temp_dir().join("mlnewton-work-scaling");
    let cfg = RunConfig {
        benchmark: true,
        bench_max_levels: 6,
        output: dir.join("bench"),
        ..Default::default()
    };
    let report = cmd_bench(&cfg)?;
    print!("{}", std::fs::read_to_string(&report.report_path).unwrap_or_default());
    Ok(())
}
