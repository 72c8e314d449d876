//! `sca-doe`: simulate traces, condition them, run leakage metrics, and drive
//! 2^3 factorial campaigns over the whole chain.
//!
//! Exit codes: 0 success, 1 a run failed, 2 usage or schema error,
//! 3 I/O error, 4 data shape mismatch.

mod analyze;
mod doe;
mod exit;
mod report;
mod simulate;
mod util;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "sca-doe", version, about = "Side-channel evaluation driven by factorial experiments")]
struct Cli {
    /// Worker threads for parallel work; defaults to the number of cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a simulated trace set.
    Simulate(simulate::SimulateArgs),
    /// Apply preprocessing steps to stored trace sets.
    Preprocess(analyze::PreprocessArgs),
    /// Run one leakage metric on stored trace sets.
    Analyze(analyze::AnalyzeArgs),
    /// Execute (or replay) one iteration of an experiment plan.
    Doe(doe::DoeArgs),
    /// Render a campaign report or a result curve.
    Report(report::ReportArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be positive");
            return ExitCode::from(exit::USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(exit::FAILED);
        }
    }
    let outcome = match cli.command {
        Command::Simulate(a) => simulate::run(a),
        Command::Preprocess(a) => analyze::preprocess(a),
        Command::Analyze(a) => analyze::analyze_cmd(a),
        Command::Doe(a) => doe::run(a),
        Command::Report(a) => report::run(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
