//! Command-line front end for `qspec`.
//!
//! Every subcommand reads one JSON run configuration, writes its primary
//! output (CSV, or JSON for `optimal-pulse`) to `--out` or stdout, and
//! optionally a JSON summary. Exit codes: 0 success, 2 configuration or I/O
//! error, 3 numerical certification failure.

pub mod commands;
pub mod run_config;
pub mod table;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use qspec::{ParameterTag, Regularization};
use thiserror::Error;

use commands::{Overrides, Report};
use run_config::Loaded;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {problem}\n  hint: {hint}")]
    Config {
        path: String,
        problem: String,
        hint: String,
    },

    #[error("{path}: {context}: {source}\n  hint: {}", compute_hint(.source))]
    Compute {
        path: String,
        context: String,
        #[source]
        source: qspec::Error,
    },

    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
}

fn compute_hint(e: &qspec::Error) -> &'static str {
    match e {
        qspec::Error::InvalidGrid(_) | qspec::Error::WindowTooSmall(_) => "raise --grid-budget (at least 512)",
        e if e.is_numerical() => {
            "the model may have nearly degenerate bright levels; rerun with --verbose for the candidate table"
        }
        _ => "check the values in the config",
    }
}

impl CliError {
    pub fn config(path: &Path, problem: impl Into<String>, hint: impl Into<String>) -> Self {
        CliError::Config {
            path: path.display().to_string(),
            problem: problem.into(),
            hint: hint.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Compute { source, .. } if source.is_numerical() => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "qspec",
    version,
    about = "Single-photon spectroscopy: precision bounds, QFI, sweeps and scattering"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// JSON run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Frequency-grid node budget (>= 512).
    #[arg(long, global = true)]
    pub grid_budget: Option<usize>,

    /// Print optimizer diagnostics as JSON on stderr.
    #[arg(long, global = true)]
    pub verbose: bool,

    /// Parameter to estimate: `gamma` or `detuning(j)`.
    #[arg(long, global = true)]
    pub parameter: Option<ParameterTag>,

    /// Write a JSON summary here.
    #[arg(long, global = true)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Precision bound and extremal frequencies for every parameter.
    Bounds,
    /// QFI of the configured pulse.
    Qfi,
    /// QFI of the optimal line pair against the line width.
    SweepKappa,
    /// QFI of resonant pulse families against their bandwidth.
    BandwidthSweep,
    /// Optimal line pair as a pulse block.
    OptimalPulse {
        /// Line width in units of the rate.
        #[arg(long)]
        kappa: Option<f64>,
        /// Line shape: lorentzian, gaussian or rectangular.
        #[arg(long)]
        reg: Option<Regularization>,
    },
    /// Scattered pulse in frequency (and optionally time) domain.
    Scatter {
        /// Also write the time-domain table here.
        #[arg(long)]
        time_out: Option<PathBuf>,
    },
}

fn write_to(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Runs one command and returns its report without writing anything.
pub fn execute(cli: &Cli) -> Result<Report, CliError> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::config(Path::new("<none>"), "no configuration given", "pass --config PATH"))?;
    let loaded = Loaded::from_path(path)?;
    let mut o = Overrides {
        parameter: cli.parameter,
        grid_budget: cli.grid_budget,
        ..Overrides::default()
    };
    match &cli.command {
        Command::Bounds => commands::bounds(&loaded, &o),
        Command::Qfi => commands::qfi(&loaded, &o),
        Command::SweepKappa => commands::sweep(&loaded, &o),
        Command::BandwidthSweep => commands::bandwidths(&loaded, &o),
        Command::OptimalPulse { kappa, reg } => {
            o.kappa = *kappa;
            o.regularization = *reg;
            commands::optimal(&loaded, &o)
        }
        Command::Scatter { time_out } => {
            o.time_domain = time_out.is_some();
            let report = commands::scatter(&loaded, &o)?;
            if report.time_table.is_some() && time_out.is_none() {
                return Err(loaded.error(
                    "time-domain output requested without a destination",
                    "pass --time-out PATH",
                ));
            }
            Ok(report)
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let report = execute(cli)?;
    match &cli.out {
        Some(p) => write_to(p, &report.body)?,
        None => io::stdout()
            .write_all(report.body.as_bytes())
            .map_err(|source| CliError::Io {
                path: "<stdout>".into(),
                source,
            })?,
    }
    if let (Command::Scatter { time_out: Some(p) }, Some(t)) = (&cli.command, &report.time_table) {
        write_to(p, t)?;
    }
    if let Some(p) = &cli.summary {
        write_to(
            p,
            &(serde_json::to_string_pretty(&report.summary).expect("plain data serializes") + "\n"),
        )?;
    }
    if cli.verbose {
        if let Some(d) = &report.diagnostics {
            eprintln!("{}", serde_json::to_string_pretty(d).expect("plain data serializes"));
        }
    }
    Ok(())
}
