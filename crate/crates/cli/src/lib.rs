//! Batch harness around the navigation filter: simulate missions, replay
//! sensor logs and score the results against truth.

pub mod commands;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod preset;

pub use error::CliError;
pub use metrics::RunMetrics;
pub use preset::{Preset, PresetRegistry, Variant};
