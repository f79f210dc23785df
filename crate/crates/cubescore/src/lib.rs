//! Command-line front end and HTTP scoring service for `cubescore-core`.

pub mod cli;
pub mod commands;
pub mod scoring;
pub mod server;

pub use commands::{run, CliError};
pub use scoring::{ErrorBody, ScoreResponse, Scorer};
