//! Experiment runner for the `qzeno` command-line tool.
//!
//! Every experiment produces a [`report::Report`]: a parameter echo, a set
//! of scalar results and one data table. Reports render to CSV (metadata as
//! `#` comment lines) or to a single JSON document.

pub mod config;
pub mod error;
pub mod experiments;
pub mod report;

pub use config::{Experiment, Format, Settings};
pub use error::CliError;
pub use experiments::run_experiment;
pub use report::Report;

pub const TOOL_NAME: &str = "qzeno";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
