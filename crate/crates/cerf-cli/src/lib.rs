//! Library half of the `cerf` command-line tool: dataset ingestion, config
//! parsing, archive formats, and the run dispatcher. The binary is a thin
//! argument-merging shell over [`run::run`].

pub mod archive;
pub mod config;
pub mod error;
pub mod io;
pub mod run;

pub use error::{CliError, Result};
