//! Scenario files, trace export, plotting and the commands behind the
//! `vaftc` binary.

pub mod commands;
pub mod report;
pub mod scenario_file;
pub mod svg;
pub mod trace_csv;

pub use commands::{cmd_emit_default, cmd_gains, cmd_run, cmd_verify, RunOptions};
