//! Storage formats, reports and the command-line driver built on
//! `nozzlelog-core`.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod report;

pub use error::{CliError, Result};
