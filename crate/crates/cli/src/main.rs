use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;

use config::{Overrides, RunConfig};

/// Quantum walks on joined quarter planes: simulation and checks.
#[derive(Debug, Parser)]
#[command(name = "quadwalk", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML configuration file; flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Print the resolved configuration and exit
    #[arg(long, global = true)]
    dump_config: bool,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Evolve a walk and write its site distributions
    Simulate,
    /// Compare the joined walk with the enlarged and Own/Other walks
    ReduceCheck,
    /// Compare the tree walk with the joined walk
    TreeCheck,
    /// Compare generating-function coefficients with the simulator
    GenfuncCheck,
    /// Localization formula against time-averaged probabilities
    Theorem1,
    /// Weak-limit density against rescaled distributions
    Theorem2,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Invariant(String),
    Resource(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Invariant(_) => 1,
            CliError::Resource(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Invariant(m) => write!(f, "invariant violation: {m}"),
            CliError::Resource(m) => write!(f, "{m}"),
        }
    }
}

impl From<quadwalk_core::Error> for CliError {
    fn from(e: quadwalk_core::Error) -> Self {
        use quadwalk_core::Error as E;
        match e {
            E::ResourceGuard { .. } => CliError::Resource(e.to_string()),
            E::InvalidCoin(_) | E::InvalidParameter(_) | E::NotNormalized(_) | E::Horizon { .. } => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Invariant(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Invariant(format!("i/o: {e}"))
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    cfg.apply(&cli.overrides);
    if cli.dump_config {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    match cli.command {
        Command::Simulate => commands::simulate(&cfg),
        Command::ReduceCheck => commands::reduce_check(&cfg),
        Command::TreeCheck => commands::tree_check(&cfg),
        Command::GenfuncCheck => commands::genfunc_check(&cfg),
        Command::Theorem1 => commands::theorem1(&cfg),
        Command::Theorem2 => commands::theorem2(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("quadwalk: {e}");
            ExitCode::from(e.code())
        }
    }
}
