// SPDX-License-Identifier: Apache-2.0

//! `qng`: threshold tables, certification, Ramsey decay scans and
//! Monte-Carlo checks from the command line.
//!
//! Exit codes: 0 ok, 1 usage or domain error, 2 numerical or simulation
//! failure, 3 nothing certified, 4 Monte-Carlo violations.

mod cache;
mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use qng_core::{FockPair, ThresholdKind};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Failed(String),
    #[error("{0}")]
    Io(String),
    #[error("measured coherence is not certified against any threshold")]
    NotCertified,
    #[error("{0} sampled states exceed the threshold")]
    Violations(u64),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Domain(_) => 1,
            CliError::Failed(_) | CliError::Io(_) => 2,
            CliError::NotCertified => 3,
            CliError::Violations(_) => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "qng",
    version,
    about = "Non-Gaussian Fock-pair coherence thresholds and certification"
)]
struct Cli {
    /// Fock truncation used by the threshold solver.
    #[arg(long, global = true, default_value_t = 128, value_parser = clap::value_parser!(u64).range(16..=4096))]
    trunc_dim: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute threshold tables.
    Thresholds {
        /// Fock pair as `m,n`; repeatable.
        #[arg(long = "pair", required = true)]
        pairs: Vec<FockPair>,
        /// Threshold kind; repeatable, all kinds when omitted.
        #[arg(long = "kind")]
        kinds: Vec<ThresholdKind>,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certify a measured coherence against every threshold.
    Certify {
        #[arg(long)]
        pair: FockPair,
        #[arg(long)]
        measured: f64,
        /// One-sigma uncertainty of the measured coherence.
        #[arg(long, default_value_t = 0.0)]
        uncertainty: f64,
        /// Threshold the reported depth refers to.
        #[arg(long, default_value = "genuine-n")]
        kind: ThresholdKind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a Ramsey decay scan described by a TOML or JSON scenario.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sample random Gaussian states and count threshold violations.
    McVerify {
        #[arg(long, default_value = "genuine-n")]
        kind: ThresholdKind,
        #[arg(long)]
        pair: FockPair,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let trunc = cli.trunc_dim as usize;
    match cli.command {
        Command::Thresholds { pairs, kinds, out } => {
            commands::thresholds(&pairs, &kinds, trunc, out.as_deref())
        }
        Command::Certify {
            pair,
            measured,
            uncertainty,
            kind,
            out,
        } => commands::certify(pair, measured, uncertainty, kind, trunc, out.as_deref()),
        Command::Simulate { config, out, seed } => commands::simulate(&config, &out, trunc, seed),
        Command::McVerify {
            kind,
            pair,
            samples,
            seed,
            out,
        } => commands::mc_verify(kind, pair, samples, seed, trunc, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // clap uses 2 for usage errors; here 2 means a numerical failure
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
