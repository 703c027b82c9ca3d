//! Command-line front end and file formats.
//!
//! The `chronos` binary wraps [`cli::run`]. Datasets travel between commands
//! as TRAJ1 text files ([`traj1`]); curves and tables are written as CSV
//! ([`csvio`]) and line charts as SVG ([`svg`]).

pub mod cli;
pub mod config;
pub mod csvio;
pub mod error;
pub mod raw;
pub mod svg;
pub mod traj1;

pub use cli::run;
pub use error::{CliError, CliResult};
