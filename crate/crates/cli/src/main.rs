//! `hug-exp`: runs the Hug experiments and writes CSV/JSON data.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 numerical
//! failure.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Experiment, ExperimentConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(hug_core::HugError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<hug_core::HugError> for CliError {
    /// Parameter and shape errors come from the configuration; everything
    /// else is a failure of the computation itself.
    fn from(e: hug_core::HugError) -> Self {
        use hug_core::HugError as E;
        match e {
            E::InvalidParameter(_) | E::DimensionMismatch { .. } | E::GridMismatch(_) => {
                CliError::Config(e.to_string())
            }
            e => CliError::Numerical(e),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hug-exp", version, about = "Hug integrator experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: results/<experiment>).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<usize>,
    /// Use the full replicate count and trajectory length.
    #[arg(long)]
    full_scale: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// One- and two-step errors on the anisotropic ellipse.
    Table1(Common),
    /// Local, two-step and global error orders.
    Convergence(Common),
    /// Reduced ellipse trajectories over a grid of initial conditions.
    PhasePortrait(Common),
    /// Fold-back trajectory with its reference arc and classification.
    Foldback(Common),
    /// Maximal excursion study on an ellipsoid.
    Ellipsoid {
        #[command(flatten)]
        common: Common,
        /// Preset dimension, 3 or 6.
        #[arg(long)]
        dim: Option<usize>,
    },
    /// Excursion ECDFs for several dimensions at matched K.
    Ecdf(Common),
    /// Tail probability of |u^T v| for v uniform on the sphere.
    SphereTail {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        h: Vec<f64>,
        /// Ambient dimension(s).
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
    },
    /// Hug Metropolis chain.
    Chain(Common),
}

fn resolve(command: Command) -> Result<(Experiment, ExperimentConfig, PathBuf), CliError> {
    let (exp, common, extra): (Experiment, Common, Box<dyn FnOnce(&mut ExperimentConfig)>) = match command {
        Command::Table1(c) => (Experiment::Table1, c, Box::new(|_| {})),
        Command::Convergence(c) => (Experiment::Convergence, c, Box::new(|_| {})),
        Command::PhasePortrait(c) => (Experiment::PhasePortrait, c, Box::new(|_| {})),
        Command::Foldback(c) => (Experiment::Foldback, c, Box::new(|_| {})),
        Command::Ellipsoid { common, dim } => (
            Experiment::Ellipsoid,
            common,
            Box::new(move |cfg| {
                if dim.is_some() {
                    cfg.dim = dim;
                }
            }),
        ),
        Command::Ecdf(c) => (Experiment::Ecdf, c, Box::new(|_| {})),
        Command::SphereTail { common, h, n } => (
            Experiment::SphereTail,
            common,
            Box::new(move |cfg| {
                if !h.is_empty() {
                    cfg.h = Some(h);
                }
                if !n.is_empty() {
                    cfg.n = Some(n);
                }
            }),
        ),
        Command::Chain(c) => (Experiment::Chain, c, Box::new(|_| {})),
    };
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    // command-line flags override the file
    if common.seed.is_some() {
        cfg.seed = common.seed;
    }
    if common.replicates.is_some() {
        cfg.replicates = common.replicates;
    }
    if common.full_scale {
        cfg.full_scale = Some(true);
    }
    extra(&mut cfg);
    cfg.validate_for(exp)?;
    cfg.experiment = Some(exp);
    let out = common
        .out
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("results").join(exp.name()));
    cfg.out = Some(out.clone());
    Ok((exp, cfg, out))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = resolve(cli.command).and_then(|(exp, cfg, out)| run::run(exp, cfg, &out));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hug-exp: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
