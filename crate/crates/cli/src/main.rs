//! `microsynth`: synthesize tabular microdata, evaluate the result and
//! replicate regressions across original and synthetic files.

mod cmd;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "microsynth", version, about = "Sequential CART synthesis and evaluation of tabular microdata")]
struct Cli {
    /// Worker threads. Output bytes do not depend on this value.
    #[arg(long, global = true, env = "MICROSYNTH_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit sequential CART models and write a synthetic CSV.
    Synthesize(cmd::synthesize::SynthesizeArgs),
    /// Score a synthetic file against the original.
    Evaluate(cmd::evaluate::EvaluateArgs),
    /// Fit the same regressions on several datasets and compare intervals.
    Replicate(cmd::replicate::ReplicateArgs),
    /// Exact-match disclosure audit over quasi-identifier columns.
    Audit(cmd::audit::AuditArgs),
    /// Means and category shares, optionally after recodes and a filter.
    Summarize(cmd::summarize::SummarizeArgs),
}

/// Options shared by subcommands that read CSV files.
#[derive(Debug, Args)]
pub struct SchemaArg {
    /// JSON list of column schemas; inferred from the data when omitted.
    #[arg(long)]
    pub schema: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(CliError::config)?;
    }
    match cli.command {
        Command::Synthesize(a) => cmd::synthesize::run(a),
        Command::Evaluate(a) => cmd::evaluate::run(a),
        Command::Replicate(a) => cmd::replicate::run(a),
        Command::Audit(a) => cmd::audit::run(a),
        Command::Summarize(a) => cmd::summarize::run(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("microsynth: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
