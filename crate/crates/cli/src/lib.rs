//! Library half of the `evrank` command-line tool.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod records;

pub use error::{exit, CliError, Result};
