//! Configuration handling and commands behind the `phonon-stirap` binary.

pub mod commands;
pub mod config;

pub use commands::{cmd_simulate, cmd_spectrum, cmd_stirap3, cmd_sweep, load_config, CliError};
pub use config::{parse_config, serialize, ConfigError, RunConfig};
