//! Batch commands of the `qvn` tool. Each command returns the deterministic
//! `canonical` part of its JSON report; `main` adds the `meta` part.

pub mod commands;
pub mod error;

pub use commands::{cmd_compose, cmd_qec_check, cmd_run, cmd_topo_eval, ComposeConfig, RunConfig};
pub use error::CliError;
