//! Standard-library companion to `smoothopt-core`: INI run configuration,
//! a subprocess objective, a rayon worker pool, atomic JSON-lines and CSV
//! output, and the `smoothopt` command line.

pub mod cli;
pub mod commands;
pub mod config;
pub mod external;
pub mod format;
pub mod parallel;
pub mod store;

pub use config::{RawConfig, RunConfig};
