//! Command-line front end for the camouflage pipeline.
//!
//! Wires image ingestion ([`pgm`]), the simulation in `camo-core`, and
//! the experiment harness into four subcommands (`run`, `sweep`,
//! `generate`, `synth`) with reproducible flag/config handling.

pub mod args;
pub mod config;
pub mod pgm;
pub mod report;
pub mod runner;

pub use args::Cli;
pub use runner::{run, CliError};
