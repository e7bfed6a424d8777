//! Command-line front end: configuration, spell filters and the simulate,
//! estimate, decompose and validate workflows.

pub mod commands;
pub mod config;
pub mod filter;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

pub use commands::Outcome;
pub use config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Input {
        path: PathBuf,
        #[source]
        source: wagesearch::Error,
    },

    #[error("cannot write {}: {source}", path.display())]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] wagesearch::Error),
}

fn core_exit_code(e: &wagesearch::Error) -> u8 {
    use wagesearch::Error;
    match e {
        Error::Experiment { source, .. } => core_exit_code(source),
        Error::NoConvergence { .. } | Error::CalibrationBoundary { .. } => 3,
        e if e.is_numerical() => 3,
        Error::Io(_) => 1,
        _ => 2,
    }
}

impl CliError {
    /// 2 for configuration and input errors, 3 for numerical failures, 1 when
    /// an output cannot be written.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Input { source, .. } if source.is_numerical() => 3,
            CliError::Input { .. } => 2,
            CliError::Core(source) => core_exit_code(source),
            CliError::Output { .. } => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "wagesearch", version, about = "Equilibrium search model: simulate, estimate, decompose, validate")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Common {
    /// TOML run configuration; built-in defaults when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw spell samples from each configured segment.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        replicates: Option<usize>,
    },
    /// Fit each segment found in the spell files.
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Bootstrap replicates (0 disables intervals).
        #[arg(long)]
        bootstrap: Option<usize>,
        /// Lower wage quantile dropped before smoothing.
        #[arg(long)]
        truncate: Option<f64>,
        /// Keep only spells matching, e.g. `origin == E && wage > 20`.
        #[arg(long)]
        filter: Option<String>,
        #[arg(required = true)]
        spells: Vec<PathBuf>,
    },
    /// Counterfactual decomposition grid and wage-offer curves.
    Decompose {
        #[command(flatten)]
        common: Common,
        /// Reference and comparison fit records from `estimate`.
        #[arg(long, num_args = 2, value_names = ["REFERENCE", "COMPARISON"])]
        fits: Option<Vec<PathBuf>>,
    },
    /// Replicate-and-refit Monte Carlo check of the estimator.
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        replicates: Option<usize>,
        #[arg(long)]
        truncate: Option<f64>,
    },
}

fn load(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(o) = &common.out {
        cfg.out = o.clone();
    }
    Ok(cfg)
}

pub fn run(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Simulate { common, replicates } => {
            let mut cfg = load(&common)?;
            if let Some(r) = replicates {
                cfg.simulate.replicates = r;
            }
            cfg.check()?;
            commands::simulate(&cfg, common.config.as_deref())
        }
        Command::Estimate { common, bootstrap, truncate, filter, spells } => {
            let mut cfg = load(&common)?;
            if let Some(b) = bootstrap {
                cfg.estimate.bootstrap = b;
            }
            if let Some(q) = truncate {
                cfg.estimate.truncation = q;
            }
            if filter.is_some() {
                cfg.estimate.filter = filter;
            }
            cfg.check()?;
            commands::estimate(&cfg, common.config.as_deref(), &spells)
        }
        Command::Decompose { common, fits } => {
            let mut cfg = load(&common)?;
            if let Some(f) = fits {
                cfg.decompose.fits = f;
            }
            cfg.check()?;
            commands::decompose(&cfg, common.config.as_deref())
        }
        Command::Validate { common, replicates, truncate } => {
            let mut cfg = load(&common)?;
            if let Some(r) = replicates {
                cfg.validate.replicates = r;
            }
            if let Some(q) = truncate {
                cfg.validate.truncation = q;
            }
            cfg.check()?;
            commands::validate(&cfg, common.config.as_deref())
        }
    }
}
