//! Library side of the `bcp` command: boundary expressions, run execution and report output.

pub mod app;
pub mod expr;
pub mod report;

pub use app::{execute, Cli, CliError, Command, Format, Job};
