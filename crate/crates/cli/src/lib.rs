//! Library side of the `phasesep` command-line tool.

pub mod audio;
pub mod commands;
pub mod error;
pub mod experiment;

pub use commands::{run, Cli};
pub use error::{CliError, CliResult};
