//! Library side of the `encsec` binary.
//!
//! Subcommands are plain functions over a [`RunConfig`] so they can be
//! driven in-process by tests; [`run`] adds argument handling and file
//! output on top.

pub mod commands;
pub mod config;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] encsec_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    /// 2 for configuration problems, 3 for numerical failures, 1 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(io::Error::other(e))
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "encsec",
    version,
    about = "Security-parameter design for encrypted control systems"
)]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in configuration (paper_sec6, fig3a..fig3i, fig4a..fig4f).
    #[arg(long, global = true)]
    pub preset: Option<String>,
    /// Overrides `attack.seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for CSV/JSON outputs; created if missing.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, Subcommand)]
pub enum Command {
    /// Minimum dangerous sample count, security parameter and key length.
    Design,
    /// Identifying complexity and its bounds over the N grid.
    ComplexityCurve,
    /// Monte Carlo least-squares identification attack over the N grid.
    AttackSim,
    /// Encrypted control loop against its plaintext reference.
    LoopDemo,
}

impl Cli {
    pub fn load_config(&self) -> Result<RunConfig, CliError> {
        match (&self.config, &self.preset) {
            (Some(path), None) => RunConfig::from_file(path),
            (None, Some(name)) => RunConfig::preset(name),
            _ => Err(CliError::Config("pass exactly one of --config or --preset".into())),
        }
    }
}

fn create_out(dir: &Path, name: &str) -> Result<fs::File, CliError> {
    fs::create_dir_all(dir)?;
    Ok(fs::File::create(dir.join(name))?)
}

/// Runs one subcommand, printing to `stdout` and writing files under `--out`.
pub fn run(cli: &Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = cli.load_config()?;
    let seed = cfg.seed(cli.seed);
    match cli.command {
        Command::Design => {
            let result = commands::design(&cfg)?;
            let json = commands::design_json(&result);
            writeln!(stdout, "{}", result.report())?;
            writeln!(stdout, "{json}")?;
            if let Some(dir) = &cli.out {
                writeln!(create_out(dir, "design.json")?, "{json}")?;
            }
        }
        Command::ComplexityCurve => {
            let rows = commands::complexity_curve(&cfg)?;
            match &cli.out {
                Some(dir) => {
                    commands::write_curve_csv(&rows, create_out(dir, "complexity.csv")?)?;
                    writeln!(
                        stdout,
                        "wrote {} rows to {}",
                        rows.len(),
                        dir.join("complexity.csv").display()
                    )?;
                }
                None => commands::write_curve_csv(&rows, &mut *stdout)?,
            }
        }
        Command::AttackSim => {
            let sim = commands::attack_sim(&cfg, seed)?;
            match &cli.out {
                Some(dir) => {
                    commands::write_trials_csv(&sim, create_out(dir, "attack_trials.csv")?)?;
                    commands::write_summary_csv(&sim, create_out(dir, "attack_summary.csv")?)?;
                    writeln!(stdout, "{}", sim.report())?;
                }
                None => {
                    commands::write_trials_csv(&sim, &mut *stdout)?;
                    writeln!(stdout)?;
                    commands::write_summary_csv(&sim, &mut *stdout)?;
                }
            }
        }
        Command::LoopDemo => {
            let demo = commands::loop_demo(&cfg, seed)?;
            writeln!(stdout, "{}", demo.report())?;
            if let Some(dir) = &cli.out {
                demo.encrypted.write_csv(create_out(dir, "loop_encrypted.csv")?)?;
                demo.plain.write_csv(create_out(dir, "loop_plain.csv")?)?;
            }
        }
    }
    Ok(())
}
