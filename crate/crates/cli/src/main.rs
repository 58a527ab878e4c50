use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use compete::commands::{self, Overrides, EXIT_CONFIG};
use compete::problem::parse_config;

#[derive(Parser)]
#[command(
    name = "compete",
    version,
    about = "Galerkin solver for the competing (p,q) Dirichlet problem"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Problem file (JSON).
    config: PathBuf,
    /// Directory receiving all reports.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
    /// Seed for every randomized trial; overrides the file.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of levels; overrides the file.
    #[arg(long)]
    levels: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve every level and write the report and per-level table.
    Solve(Common),
    /// Evaluate the smallness conditions; exit 0 iff all pass.
    Check(Common),
    /// Estimate embedding constants and the first eigenvalue.
    Constants(Common),
    /// Convergence study against the closed-form solution.
    Study(Common),
}

type Handler = fn(&compete::f64::ProblemSpec, &std::path::Path) -> compete::Result<i32>;

fn run(cli: Cli) -> Result<i32, compete::Error> {
    let (common, cmd): (&Common, Handler) = match &cli.command {
        Command::Solve(c) => (c, commands::cmd_solve),
        Command::Check(c) => (c, commands::cmd_check),
        Command::Constants(c) => (c, commands::cmd_constants),
        Command::Study(c) => (c, commands::cmd_study),
    };
    let overrides = Overrides {
        seed: common.seed,
        levels: common.levels,
    };
    let spec = parse_config(&common.config).and_then(|mut s| overrides.apply(&mut s).map(|_| s));
    match spec {
        Ok(spec) => cmd(&spec, &common.out_dir),
        Err(e) => {
            eprintln!("compete: {e}");
            commands::write_error(&common.out_dir, e.code.as_str(), e.message)?;
            Ok(EXIT_CONFIG)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("compete: {e}");
            ExitCode::from(commands::EXIT_SOLVER as u8)
        }
    }
}
