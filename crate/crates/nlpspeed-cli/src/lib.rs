//! Command-line front end of the spreading-speed laboratory: scenario
//! presets and configuration files, the formulas / speed-space / simulation
//! pipeline, comparison checks, sweeps and artifact emission.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod pipeline;
pub mod sweep;

pub use error::{CliError, Result};
