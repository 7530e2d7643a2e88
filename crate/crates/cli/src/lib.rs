//! Experiment harness behind the `bfly` binary.

pub mod cli;
pub mod commands;
pub mod config;
pub mod output;
pub mod pbm;
pub mod svg;

pub use cli::Cli;
pub use commands::run;
