use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use oeo_cli::summary::render_summary;
use oeo_cli::{load_experiment, replay_manifest, run_experiment, summarize_dir, CliError};
use oeo_core::benchmarks::BenchmarkKind;

#[derive(Parser)]
#[command(name = "oeo", version, about = "Run OEO, M-OEO and baseline optimizer experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML file.
    Run {
        config: PathBuf,
        /// Output directory; overrides `output_dir` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run every run listed in a manifest.jsonl.
    Replay {
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recompute summary.csv from the trace files in a run directory.
    Summarize { dir: PathBuf },
    /// List the built-in benchmark objectives.
    BenchList,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("oeo: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Run { config, out } => {
            let exp = load_experiment(&config)?;
            let (dir, entries) = run_experiment(&exp, out.as_deref())?;
            println!("{} runs written to {}", entries.len(), dir.display());
        }
        Command::Replay { manifest, out } => {
            let entries = replay_manifest(&manifest, &out)?;
            println!("{} runs replayed into {}", entries.len(), out.display());
        }
        Command::Summarize { dir } => {
            let rows = summarize_dir(&dir)?;
            print!("{}", render_summary(&rows));
        }
        Command::BenchList => {
            for kind in BenchmarkKind::ALL {
                let b = kind.default_bounds(1)?;
                println!(
                    "{:<10} [{}, {}]^d{}",
                    kind.name(),
                    b.lower()[0],
                    b.upper()[0],
                    if kind.is_smooth() { "" } else { "  (no gradient)" }
                );
            }
        }
    }
    Ok(())
}
