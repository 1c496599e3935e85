//! Data loading, the command-line driver and the REPL for SDQL.

pub mod cli;
pub mod io;
pub mod repl;
pub mod session;

pub use sdql_core as core;

/// Seed for randomized tests: `SDQL_SEED` if set, else `default`.
pub fn seed_from_env(default: u64) -> u64 {
    std::env::var("SDQL_SEED").ok().and_then(|s| s.trim().parse().ok()).unwrap_or(default)
}
