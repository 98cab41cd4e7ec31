//! Command line and HTTP front ends for `fincat-core`.

pub mod cli;
pub mod provider;
pub mod server;

pub use cli::run_cli;
