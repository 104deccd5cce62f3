//! `invcircle`: period scans, rotation numbers, contour traces and bundle
//! analyses for the three-dimensional Hénon family.

mod commands;
mod config;
mod output;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use invcircle::Error;

use crate::config::{Overrides, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Pipeline(#[from] Error),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_owned(),
            source,
        }
    }

    /// Process exit status; see the README for the table.
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Io { .. } | Self::Other(_) => 1,
            Self::Config(_) => 2,
            Self::Pipeline(e) => match e {
                Error::Config(_) | Error::SingularMap => 2,
                Error::NoAttractor | Error::NonFinite => 3,
                Error::PeriodicAttractor { .. } => 4,
                Error::DegenerateProjection { .. }
                | Error::UndefinedAngle { .. }
                | Error::AmbiguousUnwrap { .. }
                | Error::UnreliableLift { .. }
                | Error::SequenceTooShort { .. }
                | Error::DegenerateCocycle { .. }
                | Error::IntersectionDegenerate { .. } => 5,
                Error::NoBracket { .. } | Error::NoCircleBracket => 6,
                Error::NonConvergence { .. } | Error::ResidualTooLarge { .. } => 7,
                Error::NoCircle => 8,
                Error::NotFixedPoint { .. } | Error::NoComplexPair { .. } | Error::DegenerateInput(_) => 1,
            },
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "invcircle", version, about)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// TOML run configuration; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Seed for the initial tangent-frame jitter.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    b: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    m1: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    m2: Option<f64>,
    #[arg(long, global = true)]
    target_rho: Option<f64>,
    /// Orbit points per rotation-number evaluation.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Delay-embedding length.
    #[arg(long = "L", global = true)]
    delay: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Minimal and maximal attractor period over a parameter grid.
    Scan,
    /// Rotation number at one parameter point.
    Rotnum {
        /// Use the built-in analytic circle with the target rotation number.
        #[arg(long)]
        synthetic: bool,
    },
    /// Trace a rotation-number contour; resumes an existing trace.csv.
    Trace,
    /// Attractor, invariant bundles and conjugacy at one parameter point.
    Analyze,
    /// Fixed points, their multipliers and the Neimark-Sacker phase.
    Fixedpoints,
    /// Checks against the built-in synthetic generators.
    Selftest,
}

fn effective_config(g: &GlobalArgs) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(g.config.as_deref())?;
    cfg.apply(&Overrides {
        out: g.out.clone(),
        seed: g.seed,
        b: g.b,
        m1: g.m1,
        m2: g.m2,
        target_rho: g.target_rho,
        n: g.n,
        delay: g.delay,
    })?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let cfg = effective_config(&cli.global)?;
    log::info!("config {} writing to {}", cfg.hash(), cfg.out.display());
    let (report, ok) = match cli.command {
        Command::Scan => (commands::scan(&cfg)?, true),
        Command::Rotnum { synthetic } => (commands::rotnum(&cfg, synthetic)?, true),
        Command::Trace => (commands::trace(&cfg)?, true),
        Command::Analyze => (commands::analyze(&cfg)?, true),
        Command::Fixedpoints => (commands::fixedpoints(&cfg)?, true),
        Command::Selftest => commands::selftest(&cfg)?,
    };
    let text = serde_json::to_string_pretty(&report).expect("JSON values serialize");
    // A closed pipe on stdout is not a failure of the run; the files are written.
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    Ok(ok)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.global.workers {
        Some(0) => Err(CliError::Config("--workers must be at least 1".into())),
        Some(w) => invcircle::par::with_workers(w, || run(&cli)),
        None => run(&cli),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
