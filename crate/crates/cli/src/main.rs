use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use symrec_core::Error;

mod args;
mod commands;
mod config;

use args::{BoundsArgs, DiagnoseArgs, GenDataArgs, GenGraphArgs, IngestCheckArgs, RecoverArgs, SweepArgs};

#[derive(Parser, Debug)]
#[command(name = "symrec", version, about = "Recover symmetric graph matrices from linear measurements")]
struct Cli {
    /// JSON file of flag values; explicit flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for Monte-Carlo trials (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Log filter, as for `RUST_LOG`.
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Sample a graph and write its edge list.
    GenGraph(GenGraphArgs),
    /// Sample a graph matrix, a generator and measurements.
    GenData(GenDataArgs),
    /// Recover a graph matrix from a measurement manifest.
    Recover(RecoverArgs),
    /// Monte-Carlo sample-complexity sweep.
    Sweep(SweepArgs),
    /// Closed-form sample-complexity bounds.
    Bounds(BoundsArgs),
    /// Brute-force spark, restricted isometry constant and ξ of a matrix.
    Diagnose(DiagnoseArgs),
    /// Validate a measurement manifest and its matrices.
    IngestCheck(IngestCheckArgs),
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::SizeGuard(_) => 4,
        e if e.is_numerical() => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().parse_filters(&cli.log_level).init();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global().expect("global pool is built once");
    }
    let cfg = cli.config.as_deref();
    let outcome = match &cli.command {
        Command::GenGraph(a) => commands::gen_graph(a, cfg),
        Command::GenData(a) => commands::gen_data(a, cfg),
        Command::Recover(a) => commands::recover(a, cfg),
        Command::Sweep(a) => commands::sweep(a, cfg),
        Command::Bounds(a) => commands::bounds(a, cfg),
        Command::Diagnose(a) => commands::diagnose(a, cfg),
        Command::IngestCheck(a) => commands::ingest_check(a, cfg),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
