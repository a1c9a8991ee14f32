//! Configuration, report writing and command dispatch for the `synthsel` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use commands::{run, Command, Context};
pub use config::{parse_config, RunConfig};
pub use error::CliError;
