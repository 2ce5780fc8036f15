//! Config loading, report writing and the subcommands of the `torus-psido` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;
pub mod suite;
