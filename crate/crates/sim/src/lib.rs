//! Monte Carlo sweeps, lattice campaigns and invariant checks on top of `twrc-core`.

pub mod check;
pub mod config;
pub mod lab;
pub mod sweep;

use std::path::PathBuf;

pub use config::{BudgetRule, DpcSearch, PowerRule, SweepConfig};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("trial {trial} at {snr_db} dB: {source}")]
    Trial {
        trial: usize,
        snr_db: f64,
        #[source]
        source: twrc_core::Error,
    },
    #[error(transparent)]
    Core(#[from] twrc_core::Error),
}

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
