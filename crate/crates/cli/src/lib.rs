//! Text formats and subcommands of the `minap` command-line tool.

pub mod commands;
pub mod dsl;
