//! Command-line driver: TOML scenario loading, subcommands and exit codes.

pub mod commands;
pub mod config;
pub mod error;

pub use config::ScenarioConfig;
pub use error::CliError;
