//! `counting-tricks`: generate the synthetic counting benchmark, score model
//! responses against it, run the paired attention-share training demo, and
//! print detection-probe capacity tables.

use clap::{Parser, Subcommand};
use counting_tricks_cli::{demo, evaluate, generate, probe, CliError, EXIT_INVALID};

#[derive(Parser)]
#[command(name = "counting-tricks")]
#[command(version, about = "Synthetic counting benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render scenes for the selected cases and write a dataset directory.
    Generate(generate::GenerateArgs),
    /// Score a responses file (and optional attention grids) against a dataset.
    Evaluate(evaluate::EvaluateArgs),
    /// Train paired toy models, with and without the attention-share penalty.
    MasDemo(demo::DemoArgs),
    /// Print detection-probe parameter counts for given channel widths.
    ProbeParams(probe::ProbeArgs),
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        // Help and version land here too; only real errors use stderr.
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = match &cli.command {
        Command::Generate(args) => generate::run(args),
        Command::Evaluate(args) => evaluate::run(args),
        Command::MasDemo(args) => demo::run(args),
        Command::ProbeParams(args) => probe::run(args),
    };
    match result {
        Ok(code) => std::process::exit(code),
        Err(CliError::Invalid(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(EXIT_INVALID);
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            std::process::exit(1);
        }
    }
}
