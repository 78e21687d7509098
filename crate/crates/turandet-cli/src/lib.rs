//! Library surface of the pipeline runner, so the subcommands are callable
//! from tests and other tooling without spawning a process.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{
    cmd_asymptotics, cmd_bounds, cmd_density, cmd_diagnose, cmd_turan, CmdError,
};
pub use config::{ConfigError, Format, RunConfig};
