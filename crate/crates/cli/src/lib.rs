//! Library side of the `wscs-rdf` command-line tool: config parsing,
//! epsilon expressions, subcommand execution and output writers.

pub mod config;
pub mod eps;
pub mod error;
pub mod output;
pub mod run;
pub mod svg;

pub use config::{ExperimentConfig, Overrides};
pub use eps::{parse_eps, EpsParseError};
pub use error::CliError;
pub use run::{execute, Subcommand};
