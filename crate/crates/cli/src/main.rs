use clap::{Parser, Subcommand};
use lldn_cli::commands::{self, SimulateOpts};
use lldn_cli::config::load_config;
use std::path::PathBuf;
use std::process::ExitCode;

/// Analytics and Monte Carlo simulation of LLDN-mode TDMA relaying.
#[derive(Parser)]
#[command(name = "lldn", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form PER sweeps: energy and loss-rate CSV files per mode.
    Analyze {
        /// Key-value config file; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Monte Carlo scenario grid with an analytic-vs-empirical comparison.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the per-scenario superframe count.
        #[arg(long)]
        superframes: Option<u64>,
        /// Worker thread count; results do not depend on it.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Relay-position field and line sweeps with optimum search.
    Placement {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// analyze + placement in one go (default settings, `paper_repro/`).
    Figures {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "paper_repro")]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Analyze { config, out } => {
            let config = load_config(config.as_deref())?;
            let written = commands::cmd_analyze(&config, &out)?;
            println!("analyze: wrote {} files to {}", written.len(), out.display());
        }
        Command::Simulate {
            config,
            out,
            seed,
            superframes,
            threads,
        } => {
            let config = load_config(config.as_deref())?;
            let summary = commands::cmd_simulate(
                &config,
                &out,
                SimulateOpts {
                    seed,
                    superframes,
                    threads,
                },
            )?;
            println!(
                "simulate: {} scenarios, {} comparison rows, {} failed",
                summary.scenarios, summary.comparison_rows, summary.failed_rows
            );
        }
        Command::Placement { config, out } => {
            let config = load_config(config.as_deref())?;
            let written = commands::cmd_placement(&config, &out)?;
            println!(
                "placement: wrote {} files to {}",
                written.len(),
                out.display()
            );
        }
        Command::Figures { config, out } => {
            let config = load_config(config.as_deref())?;
            let written = commands::cmd_figures(&config, &out)?;
            println!("figures: wrote {} files to {}", written.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            // One machine-readable line on stderr.
            eprintln!(
                "{}",
                serde_json::json!({ "error": format!("{err:#}") })
            );
            ExitCode::FAILURE
        }
    }
}
