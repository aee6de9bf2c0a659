use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mrsbo_cli::{cmd_search, cmd_timecmp, cmd_tradeoff, cmd_train, CliError, Overrides, RunConfig};

#[derive(Parser)]
#[command(
    name = "mrsbo",
    version,
    about = "Training-free LSTM architecture search"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// TOML configuration file; flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand)]
enum Command {
    /// Search for an architecture and train the best one.
    Search(Common),
    /// Train one architecture given as a genotype, e.g. `30;20;0;12`.
    Train {
        #[arg(long)]
        genotype: String,
        #[command(flatten)]
        common: Common,
    },
    /// Time random sampling against a short Adam run.
    Timecmp(Common),
    /// Repeat the search for several sample counts.
    Tradeoff(Common),
}

fn config(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    cfg.apply(&common.overrides);
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Search(common) => {
            let s = cmd_search(&config(&common)?)?;
            println!(
                "{} best {} ({}) mrs {:e} test mae {}",
                s.strategy, s.best_genotype, s.architecture, s.best_mrs, s.test_mae
            );
        }
        Command::Train { genotype, common } => {
            let s = cmd_train(&config(&common)?, &genotype)?;
            println!("{} test mae {}", s.architecture, s.test_mae);
        }
        Command::Timecmp(common) => {
            let t = cmd_timecmp(&config(&common)?)?;
            println!(
                "median seconds: sampling {:.4}, adam {:.4} (adam / sampling = {:.3})",
                t.mrs.median,
                t.adam.median,
                t.median_speedup()
            );
        }
        Command::Tradeoff(common) => {
            let rows = cmd_tradeoff(&config(&common)?)?;
            println!("{} runs written", rows.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
