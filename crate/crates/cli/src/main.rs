//! `eil`: invariant tables, envelope figures, α sweeps and jet
//! classification from the command line.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use eil_core::EilError;

use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<EilError> for CliError {
    fn from(e: EilError) -> Self {
        use EilError::*;
        match e {
            UnknownCurve(_) | InvalidParams(_) | InvalidAlpha(_) | NotClosed | SingularMap(_)
            | PreconditionViolated(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "eil", version, about = "Envelopes of intermediate lines of plane curves")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Marching-squares grid size on the pair torus.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Comma-separated α values.
    #[arg(long, global = true, value_delimiter = ',', num_args = 1)]
    alpha: Option<Vec<f64>>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Per-point affine invariants of the curve (CSV).
    Invariants,
    /// Envelope components per α (CSV, SVG, JSON summary).
    Envelope,
    /// Cusp births and deaths over an α grid (JSON).
    Sweep,
    /// Analytic verdict for a Monge jet pair given as JSON (object or array).
    Classify { input: PathBuf },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(o) = cli.out {
        cfg.out = o;
    }
    if let Some(g) = cli.grid {
        cfg.grid_n = g;
    }
    if let Some(a) = cli.alpha {
        cfg.alphas = Some(a);
    }
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out)?;
    let written = match cli.command {
        Command::Invariants => commands::invariants(&cfg)?,
        Command::Envelope => commands::envelope(&cfg)?,
        Command::Sweep => commands::sweep(&cfg)?,
        Command::Classify { input } => commands::classify(&cfg, &input)?,
    };
    for p in written {
        println!("{}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("eil: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
