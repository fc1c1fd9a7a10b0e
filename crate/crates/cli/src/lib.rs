//! Command-line front end of the gridrisk benchmark. Each verb reads one
//! [`config::RunConfig`] and writes CSV and SVG outputs into its `out`
//! directory.

pub mod commands;
pub mod config;
pub mod svg;

pub use commands::{cmd_acopf, cmd_detect, cmd_report, cmd_simulate, cmd_synth, RunOutcome};
pub use config::{RunConfig, CASE_DIR_ENV};
