//! Library behind the `lpiv` binary: dataset I/O, result tables, and the
//! subcommand implementations.  Kept as a library so the pieces are unit
//! testable without spawning the binary.

pub mod commands;
pub mod data;
pub mod table;

pub use commands::{exit_code, run, Cli, CliError, Command, Rendered};
