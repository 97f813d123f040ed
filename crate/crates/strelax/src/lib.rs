//! Benchmark harness, instance files and verification suites for
//! `strelax-core`.

pub mod bench;
pub mod config;
pub mod error;
pub mod format;
pub mod verify;

pub use config::ExperimentConfig;
pub use error::CliError;
