//! Command-line front end for `lambda-cqed`.

pub mod config;
pub mod run;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use config::{emit_config, load_config, parse_config, ConfigError, Format, Mode, RunConfig};
pub use run::{run, RunError, Summary};

#[derive(Debug, Parser)]
#[command(name = "lambda-cqed", version, about = "Driven Λ-atom cavity QED simulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dressed-state eigenvalues against the control field.
    Eigen(RunArgs),
    /// Steady state at a single parameter point.
    Steady(RunArgs),
    /// Spectrum over the probe detuning.
    Sweep1d(RunArgs),
    /// Map over probe detuning and control field.
    Sweep2d(RunArgs),
    /// Constrained minimum of g2(0) on the map grid.
    Magic(RunArgs),
    /// Delayed intensity correlation g2(tau).
    G2tau(RunArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Jsonl,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON configuration file; omitted fields use the reference profile.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Overrides the Fock cutoff.
    #[arg(long)]
    pub nmax: Option<usize>,
}

impl Command {
    pub fn split(&self) -> (Mode, &RunArgs) {
        match self {
            Command::Eigen(a) => (Mode::Eigen, a),
            Command::Steady(a) => (Mode::Steady, a),
            Command::Sweep1d(a) => (Mode::Sweep1d, a),
            Command::Sweep2d(a) => (Mode::Sweep2d, a),
            Command::Magic(a) => (Mode::Magic, a),
            Command::G2tau(a) => (Mode::G2tau, a),
        }
    }
}

/// Configuration after applying command-line overrides.
pub fn resolve(command: &Command) -> Result<RunConfig, ConfigError> {
    let (mode, args) = command.split();
    let mut config = match &args.config {
        Some(path) => load_config(path, Some(mode))?,
        None => RunConfig::defaults(mode),
    };
    if let Some(out) = &args.out {
        config.output = Some(out.clone());
    }
    if let Some(f) = args.format {
        config.format = match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Jsonl => Format::Jsonl,
        };
    }
    if let Some(w) = args.workers {
        config.workers = w;
    }
    if let Some(n) = args.nmax {
        config.n_max = n;
    }
    config.validate()?;
    Ok(config)
}

/// Runs a parsed command line and returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    let config = match resolve(&cli.command) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    if let Some(w) = config.params().truncation_warning() {
        eprintln!("warning: {w}");
    }
    match run(&config) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
