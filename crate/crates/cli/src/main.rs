use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "lzs-sim",
    version,
    about = "Landau-Zener-Stückelberg interference map simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep the configured grid and write maps plus a manifest.
    Run {
        config: PathBuf,
        /// Worker threads (default: available parallelism).
        #[arg(long)]
        workers: Option<usize>,
        /// Output directory, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the stationary populations at one (detuning, amplitude) point.
    Probe {
        config: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        eps: f64,
        #[arg(long)]
        amp: f64,
        /// Index into the configured drive frequencies.
        #[arg(long, default_value_t = 0)]
        drive: usize,
    },
    /// Print diamond boundaries and regime classification as JSON.
    Boundaries { config: PathBuf },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run { config, workers, out } => {
            let cfg = lzs_sim::load_config(&config)?;
            let workers = workers.unwrap_or_else(lzs_sim::default_workers);
            let summary = lzs_sim::run(&cfg, workers, out.as_deref())?;
            for f in &summary.files {
                println!("{}", f.display());
            }
        }
        Command::Probe {
            config,
            eps,
            amp,
            drive,
        } => {
            let cfg = lzs_sim::load_config(&config)?;
            print!("{}", lzs_sim::format_probe(&lzs_sim::probe(&cfg, eps, amp, drive)?));
        }
        Command::Boundaries { config } => {
            let cfg = lzs_sim::load_config(&config)?;
            println!("{}", lzs_sim::boundaries_report(&cfg)?);
        }
    }
    Ok(())
}
