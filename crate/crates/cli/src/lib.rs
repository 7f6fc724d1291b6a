//! Experiment runner for the bubblelink toolkit: subcommands over CSV artifacts
//! and a reproducible end-to-end pipeline.

pub mod cli;
pub mod config;
pub mod error;
pub mod ops;
pub mod pipeline;
pub mod plot;
pub mod report;

pub use error::{CliError, Result};
