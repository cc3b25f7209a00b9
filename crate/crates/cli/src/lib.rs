//! Library side of the `lldn` command-line tool: configuration ingestion and
//! the subcommand implementations, kept out of `main.rs` so integration tests
//! can drive them in-process.

pub mod commands;
pub mod config;
pub mod csvfmt;
