//! `casimir`: batch experiments on the perfect Bose gas in anisotropic boxes.
//!
//! Every command reads an optional JSON configuration, applies flag
//! overrides, runs a volume sweep and writes `<out>/<command>.csv` plus a
//! JSON sidecar with the fit metadata.
//!
//! Exit codes: 0 success, 1 numerical non-convergence, 2 configuration error.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use clap::{Args, Parser, Subcommand};
use config::Overrides;
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(version, about = "Finite-size laboratory for the perfect Bose gas in Casimir boxes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Chemical potential per volume and its scaling constant.
    SolveMu(Common),
    /// Condensate type I/II/III and fragmentation.
    Classify(Common),
    /// Short, long and windowed cycle densities; cycle hierarchy.
    Cycles(Common),
    /// Two-point correlations along separation paths.
    Correlate(Common),
}

#[derive(Args)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Box exponents α1,α2,α3 (summing to 1).
    #[arg(long, value_parser = config::parse_triple)]
    alpha: Option<[f64; 3]>,
    /// Density above the critical density, ρ - ρ_c.
    #[arg(long, allow_hyphen_values = true)]
    rho_offset: Option<f64>,
    /// Thermal wavelength.
    #[arg(long)]
    lambda: Option<f64>,
    /// Volume sequence v0,K: V = v0·2^k for k = 0..=K.
    #[arg(long, value_parser = config::parse_volumes)]
    volumes: Option<casimir_core::scaling::VolumeSequence>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("output: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] casimir_core::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() => 1,
            _ => 2,
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (name, common) = match &cli.command {
        Command::SolveMu(c) => ("solve_mu", c),
        Command::Classify(c) => ("classify", c),
        Command::Cycles(c) => ("cycles", c),
        Command::Correlate(c) => ("correlate", c),
    };
    let overrides = Overrides {
        alpha: common.alpha,
        rho_offset: common.rho_offset,
        lambda: common.lambda,
        volumes: common.volumes,
        out: common.out.clone(),
    };
    let cfg = config::load(common.config.as_deref(), overrides)?;
    match cli.command {
        Command::SolveMu(_) => emit(&cfg, name, commands::solve_mu(&cfg)?),
        Command::Classify(_) => emit(&cfg, name, commands::classify_cmd(&cfg)?),
        Command::Cycles(_) => emit(&cfg, name, commands::cycles_cmd(&cfg)?),
        Command::Correlate(_) => emit(&cfg, name, commands::correlate_cmd(&cfg)?),
    }
}

fn emit<M: Serialize>(cfg: &config::ExperimentConfig, name: &str, report: commands::Report<M>) -> Result<(), CliError> {
    let (csv, json) = output::write_report(&cfg.out, name, &report.table, &report.meta)?;
    println!("{}", csv.display());
    println!("{}", json.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
