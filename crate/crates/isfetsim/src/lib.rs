//! Command-line front end and file formats for the `isfetsim-core` engine.

pub mod cli;
pub mod commands;
pub mod csv_io;
pub mod error;
pub mod overrides;
pub mod parallel;
pub mod plot;

pub use error::CliError;
