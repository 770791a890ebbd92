//! Configuration-driven runner for the SAV Keller-Segel solver: config
//! parsing, seeded initial data, the time loop, CSV output, sweeps and
//! pre-run checks.

pub mod check;
pub mod config;
pub mod format;
pub mod init;
pub mod output;
pub mod run;
pub mod sweep;

pub use config::{load_config, parse_config, ConfigError, SimConfig};
pub use run::{run, RunError, RunResult};
