//! Configuration, file formats and subcommands of the `rotolab` tool.

pub mod angle;
pub mod app;
pub mod commands;
pub mod config;
pub mod error;
pub mod sweep;
pub mod table;

pub use config::ExperimentConfig;
pub use error::{CliError, CliResult};
