//! Command-line driver: CSV in, JSON reports and TSV plot data out.

pub mod app;
pub mod config;
pub mod error;
pub mod formula;
pub mod report;

pub use app::{run, Cli};
pub use error::{CliError, CliResult};
