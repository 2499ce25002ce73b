//! `binpack-adversary`: runs the adversarial input tree against an online
//! algorithm, verifies the analysis, and solves the bound's max-min program.

mod commands;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "binpack-adversary", version, about = "Exact lower-bound adversary for online bin packing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Play the input tree against one algorithm and report costs, OPT bounds and ratios.
    Simulate(RunConfig),
    /// Re-check the price table, identities, first-batch margin and offline packings.
    Verify(RunConfig),
    /// Solve for the optimal weight and emit the bound sweep.
    Optimize(RunConfig),
}

#[derive(Args, Debug, Clone)]
pub struct RunConfig {
    /// Depth of the trunk (number of C batches is t − 1).
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(3..))]
    pub t: u32,
    /// Scale factor for the batch size N.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub m: u64,
    #[arg(long, default_value = "first-fit")]
    pub algorithm: String,
    /// Number of harmonic classes.
    #[arg(long, default_value_t = 7)]
    pub h: usize,
    /// Weight of a large A item, in [1, 3/2]; decimal or p/q.
    #[arg(long)]
    pub w: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub verbose: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(cfg) => commands::simulate(cfg),
        Command::Verify(cfg) => commands::verify(cfg),
        Command::Optimize(cfg) => commands::optimize(cfg),
    };
    let outcome = match result {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let mut text = match serde_json::to_string_pretty(&outcome.report) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    text.push('\n');
    let cfg = match &cli.command {
        Command::Simulate(c) | Command::Verify(c) | Command::Optimize(c) => c,
    };
    let written = match &cfg.out {
        Some(path) => std::fs::write(path, &text),
        None => std::io::stdout().write_all(text.as_bytes()),
    };
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    if outcome.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        for f in &outcome.failures {
            eprintln!("FAILED: {f}");
        }
        ExitCode::FAILURE
    }
}
