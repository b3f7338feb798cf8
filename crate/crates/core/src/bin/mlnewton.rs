use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mlnewton::cli::{cmd_bench, cmd_meshinfo, cmd_solve};
use mlnewton::config::parse_config;
use mlnewton::Error;

#[derive(Parser)]
#[command(name = "mlnewton", version, about = "Multilevel Newton eigensolver for P1 finite elements")]
struct Args {
    /// Reject unknown configuration keys.
    #[arg(long, global = true)]
    strict: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a multilevel study and write `<output>_levels.csv` and `<output>_summary.txt`.
    Solve { config: PathBuf },
    /// Time runs with 2..bench_max_levels levels and fit work against N_n.
    Bench { config: PathBuf },
    /// Print counts and sizes of a mesh file.
    Meshinfo { meshfile: PathBuf },
}

fn run(args: Args) -> Result<(), Error> {
    match args.command {
        Command::Solve { config } => {
            let cfg = parse_config(&config, args.strict)?;
            let out = cmd_solve(&cfg)?;
            print!("{}", std::fs::read_to_string(&out.summary_path).unwrap_or_default());
            println!("wrote {} and {}", out.csv_path.display(), out.summary_path.display());
        }
        Command::Bench { config } => {
            let cfg = parse_config(&config, args.strict)?;
            let report = cmd_bench(&cfg)?;
            print!("{}", std::fs::read_to_string(&report.report_path).unwrap_or_default());
            println!("wrote {} and {}", report.report_path.display(), report.csv_path.display());
        }
        Command::Meshinfo { meshfile } => print!("{}", cmd_meshinfo(&meshfile)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
