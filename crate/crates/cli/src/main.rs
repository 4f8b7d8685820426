use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand as ClapSubcommand};
use wscs_rdf_cli::run::{configure_threads, execute, Subcommand};
use wscs_rdf_cli::{CliError, ExperimentConfig, Overrides};

/// Rate-distortion of sampled cyclostationary Gaussian sources.
///
/// Parallelism follows WSCS_RDF_THREADS (0 or unset = all cores).
#[derive(Parser)]
#[command(name = "wscs-rdf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// JSON experiment config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(ClapSubcommand)]
enum Command {
    /// Rate of a single sampling configuration.
    RdfPoint(Common),
    /// R_n(D) over the rational approximations n = 1..n_max.
    SweepN(Common),
    /// R(D) over a grid of T_ps/T_s ratios.
    SweepRatio(Common),
    /// R(D) over a distortion grid for each eps in sweep.eps_list.
    SweepDistortion(Common),
    /// Monte Carlo check of the backward channel.
    Mc(Common),
}

fn run(cli: Cli) -> Result<String, CliError> {
    let (cmd, common) = match cli.command {
        Command::RdfPoint(c) => (Subcommand::RdfPoint, c),
        Command::SweepN(c) => (Subcommand::SweepN, c),
        Command::SweepRatio(c) => (Subcommand::SweepRatio, c),
        Command::SweepDistortion(c) => (Subcommand::SweepDistortion, c),
        Command::Mc(c) => (Subcommand::Mc, c),
    };
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply(&common.overrides)?;
    configure_threads()?;
    execute(cmd, &cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("wscs-rdf: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
