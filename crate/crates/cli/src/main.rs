//! Command-line entry point: nowcasting low-frequency distributions
//! from high-frequency indicators.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error,
//! 4 numerical failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::Manifest;
use distnow_core::Error;

#[derive(Parser)]
#[command(name = "distnow", version, about = "Distribution nowcasting toolkit")]
struct Cli {
    /// Run manifest (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Override the manifest seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for parallel sections (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic data bundle.
    Simulate,
    /// Estimate one model on a data bundle.
    Estimate,
    /// Run the pseudo-real-time multi-update nowcast exercise.
    Nowcast,
    /// Run the replication accuracy study.
    #[command(name = "mc-study")]
    McStudy,
    /// Re-score stored forecast densities against realized ones.
    Evaluate,
}

fn exit_code_of(err: &Error) -> u8 {
    match err {
        Error::Config(_) => 2,
        Error::Data(_) | Error::Io(_) | Error::Csv(_) => 3,
        Error::Numerical(_) => 4,
    }
}

fn missing_section(name: &str) -> Error {
    Error::Config(format!("config is missing the [{name}] section"))
}

fn run(cli: &Cli) -> Result<(), Error> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot size the thread pool: {e}")))?;
    }
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config <path> is required".into()))?;
    let mut manifest = Manifest::load(config_path)?;

    match &cli.command {
        Command::Simulate => {
            let mut cfg = manifest.simulate.clone().ok_or_else(|| missing_section("simulate"))?;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            manifest.simulate = Some(cfg.clone());
            manifest.save(&cli.out.join("manifest.toml"))?;
            commands::simulate::run(&cfg, &cli.out)
        }
        Command::Estimate => {
            let mut cfg = manifest.estimate.clone().ok_or_else(|| missing_section("estimate"))?;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            manifest.estimate = Some(cfg.clone());
            manifest.save(&cli.out.join("manifest.toml"))?;
            commands::estimate::run(&cfg, &cli.out)
        }
        Command::Nowcast => {
            let mut cfg = manifest.nowcast.clone().ok_or_else(|| missing_section("nowcast"))?;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            manifest.nowcast = Some(cfg.clone());
            manifest.save(&cli.out.join("manifest.toml"))?;
            commands::nowcast::run(&cfg, &cli.out)
        }
        Command::McStudy => {
            let mut cfg = manifest.mc_study.clone().ok_or_else(|| missing_section("mc-study"))?;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            manifest.mc_study = Some(cfg.clone());
            manifest.save(&cli.out.join("manifest.toml"))?;
            commands::mc_study::run(&cfg, &cli.out)
        }
        Command::Evaluate => {
            let cfg = manifest.evaluate.clone().ok_or_else(|| missing_section("evaluate"))?;
            manifest.save(&cli.out.join("manifest.toml"))?;
            commands::evaluate::run(&cfg, &cli.out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_of(&e))
        }
    }
}
