//! `gridmor` — generate or import parametric swing-equation network models,
//! build structure-preserving reduced models, certify them, and sweep
//! relative error surfaces over the parameter box.
//!
//! Exit codes: 0 success, 1 validation/certification failure, 2 usage error.

mod commands;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "gridmor", version, about, max_term_width = 100)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic network model file
    Gen(commands::GenArgs),
    /// Import a MATPOWER case file as a model file
    Import(commands::ImportArgs),
    /// Build a parametric reduced model (modified SOR-IRKA per sample)
    Reduce(commands::ReduceArgs),
    /// Certify a reduced model at parameter points
    Check(commands::CheckArgs),
    /// Evaluate frequency responses to CSV/JSON
    Eval(commands::EvalArgs),
    /// Relative error sweep over the parameter box
    Sweep(commands::SweepArgs),
    /// Error-vs-order convergence study
    Study(commands::StudyArgs),
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(args) => commands::run_gen(args),
        Command::Import(args) => commands::run_import(args),
        Command::Reduce(args) => commands::run_reduce(args),
        Command::Check(args) => commands::run_check(args),
        Command::Eval(args) => commands::run_eval(args),
        Command::Sweep(args) => commands::run_sweep(args),
        Command::Study(args) => commands::run_study(args),
    };
    match result {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(1);
        }
    }
}
