//! Command-line driver, file formats and parallel runners for
//! [`qndsqueeze_core`].

pub mod cli;
pub mod config;
pub mod csv;
pub mod error;
pub mod parallel;
pub mod report;

pub use error::CliError;
