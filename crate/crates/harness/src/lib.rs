//! Batch front end for `densify-core`: experiment files, density sweeps
//! written as CSV with a checksummed manifest, asymptote reports, and the
//! convergence verdict comparing the two.

use std::path::PathBuf;

use densify_core::antenna::AntennaError;
use densify_core::asymptotics::LimitError;
use densify_core::fading::FadingError;
use densify_core::pathloss::PathLossError;
use densify_core::simulator::SimError;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub mod asymptote;
pub mod commands;
pub mod compare;
pub mod config;
pub mod manifest;
pub mod sweep;

pub const TOOL_NAME: &str = "densify";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
/// Caps the worker threads of every command.
pub const THREADS_ENV: &str = "DENSIFY_THREADS";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(
        "{}{}: {message}{}",
        origin,
        location.map(|(l, c)| format!(":{l}:{c}")).unwrap_or_default(),
        section.as_ref().map(|s| format!(" (in [{s}])")).unwrap_or_default()
    )]
    Parse {
        origin: String,
        /// Line and column, 1-based; absent for document-level errors.
        location: Option<(usize, usize)>,
        section: Option<String>,
        message: String,
    },
    #[error("{0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("refusing to compare: sweep regime {sweep} does not match any asymptote entry ({report})")]
    HashMismatch { sweep: String, report: String },
    #[error(transparent)]
    PathLoss(#[from] PathLossError),
    #[error(transparent)]
    Fading(#[from] FadingError),
    #[error(transparent)]
    Antenna(#[from] AntennaError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Limit(#[from] LimitError),
    #[error("thread pool: {0}")]
    Threads(String),
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Worker count from `DENSIFY_THREADS`, `None` when unset.
pub fn threads_from_env() -> Result<Option<usize>, HarnessError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(HarnessError::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
    }
}

/// Runs `f` on a dedicated pool of `threads` workers, or rayon's default.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, HarnessError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| HarnessError::Threads(e.to_string()))?;
    Ok(pool.install(f))
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/harness.md")]
    mod harness {}
    #[doc = include_str!("../../../book/src/outputs.md")]
    mod outputs {}
}
