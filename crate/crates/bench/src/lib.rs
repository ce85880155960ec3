//! Experiment harness: runs the dataset × classifier × noise placement ×
//! seed grid and writes JSON and CSV reports.

pub mod commands;
pub mod compare;
pub mod config;
pub mod error;
pub mod grid;
pub mod presets;
pub mod report;

pub use commands::{cmd_noise, cmd_partition, cmd_report, cmd_run, cmd_simulate};
pub use config::{AveragingMode, DatasetConfig, Placement, RunConfig};
pub use error::{BenchError, Result};
pub use presets::Preset;
pub use report::BenchReport;

/// Environment variable naming the default data directory.
pub const DATA_DIR_ENV: &str = "DPSHARE_DATA_DIR";
