//! Command-line driver: simulate data, fit and select, evaluate, and run
//! replicated experiments.

pub mod commands;
pub mod config;
pub mod error;

pub use error::{CliError, CliResult};

/// Size the global thread pool from `FUNCSEL_THREADS`, if set.
pub fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("FUNCSEL_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("FUNCSEL_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot size the thread pool: {e}")))
}
