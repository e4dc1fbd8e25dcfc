//! Command-line entry point: run a seeded sweep or the validation suite and
//! emit CSV to stdout or a file.

use clap::{Parser, Subcommand};
use rislink::sim::{self, RunConfig, SimError};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "rislink",
    version,
    about = "Link-level simulator for a reflecting-surface mmWave downlink"
)]
struct Cli {
    /// TOML configuration file; built-in defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Realization-count override.
    #[arg(long, global = true)]
    realizations: Option<usize>,
    /// Output CSV path; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker-thread override (0 = one per core). Never changes results.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimation error against pilot SNR.
    NmsePnr,
    /// Estimation error against feedback bits.
    NmseBits,
    /// Spectral efficiency against the kept-path count.
    SePaths,
    /// Spectral efficiency against feedback bits.
    SeBits,
    /// Spectral efficiency against data SNR.
    SeDnr,
    /// Run the numerical validation suite and report every check.
    Validate,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, SimError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::from_toml_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(realizations) = cli.realizations {
        config.realizations = realizations;
    }
    if let Some(workers) = cli.workers {
        config.workers = workers;
    }
    config.validate()?;

    let text = match cli.command {
        Command::Validate => {
            let report = sim::run_validation(&config)?;
            emit(&cli.out, report.to_csv())?;
            let code = if report.all_passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
            return Ok(code);
        }
        Command::NmsePnr => sim::metrics_csv(&sim::run_nmse_vs_pnr(&config)?),
        Command::NmseBits => sim::metrics_csv(&sim::run_nmse_vs_bits(&config)?),
        Command::SePaths => sim::metrics_csv(&sim::run_se_vs_paths(&config)?),
        Command::SeBits => sim::metrics_csv(&sim::run_se_vs_bits(&config)?),
        Command::SeDnr => sim::metrics_csv(&sim::run_se_vs_dnr(&config)?),
    };
    emit(&cli.out, text)?;
    Ok(ExitCode::SUCCESS)
}

fn emit(out: &Option<PathBuf>, text: String) -> Result<(), SimError> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}
