//! File formats, run directories and the command-line driver for the ladder
//! bus flow. The algorithms live in `ladderbus-core`.

pub mod budget;
pub mod commands;
pub mod config;
pub mod ctrlfile;
pub mod graphfile;
pub mod report;
pub mod state;
pub mod sweep;
pub mod trace;

pub use budget::Deadline;
pub use commands::{default_coefficients, CliError, Runner};
pub use config::Config;
pub use state::{PipelineState, RunDir};
