//! Experiment harness for the vnfpp toolkit.
//!
//! Subcommands cover the full workflow: `generate` an instance file,
//! `optimize` it (archive + hypervolume CSVs), run baseline `heuristics`,
//! `validate` the analytical models against the simulator, score archives
//! with `hv`, and `inspect` a single placement.
//!
//! Exit codes: 0 success, 1 usage error, 2 invalid or infeasible input,
//! 3 internal error.

use clap::{Parser, Subcommand};

mod common;
mod generate;
mod heuristics;
mod hv;
mod inspect;
mod optimize;
mod validate;

#[derive(Parser)]
#[command(name = "vnfpp", version, about = "VNF placement: generate, optimize, validate")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random problem instance file
    Generate(generate::GenerateArgs),
    /// Search for Pareto-optimal placements and score the archive
    Optimize(optimize::OptimizeArgs),
    /// Run placement heuristics over generated subproblems
    Heuristics(heuristics::HeuristicsArgs),
    /// Cross-check the analytical models against the packet simulator
    Validate(validate::ValidateArgs),
    /// Score archive CSVs with the hypervolume indicator
    Hv(hv::HvArgs),
    /// Print a placement report for one genotype
    Inspect(inspect::InspectArgs),
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests print to stdout and succeed; real
            // parse errors are usage errors.
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    let result = match cli.command {
        Command::Generate(args) => generate::run(args),
        Command::Optimize(args) => optimize::run(args),
        Command::Heuristics(args) => heuristics::run(args),
        Command::Validate(args) => validate::run(args),
        Command::Hv(args) => hv::run(args),
        Command::Inspect(args) => inspect::run(args),
    };
    if let Err(failure) = result {
        eprintln!("error: {}", failure.message());
        std::process::exit(failure.exit_code());
    }
}
