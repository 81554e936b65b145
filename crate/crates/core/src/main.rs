use clap::{Parser, Subcommand};
use lamperti::runner::{run, RunOptions};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "lamperti", version, about = "Scale functions, Lamperti paths and explosion-time experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one JSON config and write its artifacts plus manifest.json.
    Run {
        config: PathBuf,
        /// Output directory (overrides `out` in the config; default ./out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed override for stochastic kinds.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (default: $LAMPERTI_THREADS, then all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn main() -> ExitCode {
    let Command::Run { config, out, seed, threads } = Cli::parse().command;
    let report = run(&config, &RunOptions { out, seed, threads });
    match &report.manifest.error {
        Some(e) => eprintln!("error: {e}"),
        None => eprintln!("wrote {} file(s) to {}", report.manifest.outputs.len() + 1, report.out_dir.display()),
    }
    ExitCode::from(report.exit_code as u8)
}
