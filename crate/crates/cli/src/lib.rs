//! Command-line front end: confidence bounds for observed counts, Monte
//! Carlo coverage simulations, brute-force verification suites and
//! chi-square utilities.

pub mod bounds;
pub mod cli;
pub mod error;
pub mod input;
pub mod simulate;
pub mod svg;
pub mod verify;

pub use cli::{run, Cli};
pub use error::{CliError, CliResult};
