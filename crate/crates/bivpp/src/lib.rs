//! Std companion to `bivpp-core`: TOML run configs, CSV/JSON reports,
//! rayon-parallel drivers and the `bivpp` command line.

pub mod config;
pub mod error;
pub mod parallel;
pub mod report;

pub use error::{CliError, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_TRIAL_COMPLETE};
