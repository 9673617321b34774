//! Scenario files, figure presets, sweep execution and CSV output for the `dqho` tool.

pub mod config;
pub mod output;
pub mod presets;
pub mod runner;

pub use config::{ConfigError, ScenarioConfig};
pub use runner::RunError;
