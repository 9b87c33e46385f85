//! Experiment orchestration behind the `weaktime` command-line tool.

pub mod commands;
pub mod config;
pub mod output;
pub mod record;
pub mod verify;

pub use commands::{cmd_fig1, cmd_fig2, cmd_sweep, cmd_table, cmd_verify};
pub use config::ExperimentConfig;
pub use record::{ResultRecord, Scalar};
pub use verify::{Check, VerifyReport};
