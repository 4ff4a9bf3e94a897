//! Command-line front end for the DEPCA solver: config parsing, run modes,
//! trajectory CSV and plain-text reports.

pub mod config;
pub mod csv;
pub mod report;
pub mod run;

pub use config::{emit, parse_config, parse_str, ConfigError, Mode, RunConfig, ValidationError};
pub use run::{run, Artifacts, RunError, RunOptions};

/// Exit status when a run could not complete.
pub const EXIT_ERROR: i32 = 1;
/// Exit status when a run completed but a check failed.
pub const EXIT_FAILED: i32 = 2;
