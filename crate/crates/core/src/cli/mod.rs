//! Batch commands: `split`, `ensemble`, `evaluate` and `xai`, all driven by
//! one TOML run configuration.
//!
//! Commands compute everything in memory first and only then write their
//! files, each through a temporary file renamed into place, while holding a
//! lock file in the output directory.

mod config;
mod ensemble;
mod evaluate;
mod output;
mod split;
mod xai;

pub use config::{Overrides, PredictionsConfig, RunConfig, XaiConfig, BUILTIN_STUB};
pub use ensemble::cmd_ensemble;
pub use evaluate::cmd_evaluate;
pub use output::{OutputLock, Outputs};
pub use split::cmd_split;
pub use xai::cmd_xai;

use std::path::PathBuf;

/// What a command produced.
#[derive(Debug, Clone, Default)]
pub struct CommandOutcome {
    /// Human-readable summary for standard output.
    pub summary: String,
    pub written: Vec<PathBuf>,
}
