//! Sensor logs, experiment configuration and result files.

pub mod config;
pub mod log;
pub mod results;

pub use config::{DenialWindow, EnableFlags, ExperimentConfig, OutputConfig, VehicleSpec};
pub use log::{read_log, read_log_from, write_log, write_log_to, SensorLog};
pub use results::{
    align_truth, read_results, read_truth, truth_diff, write_results, write_truth, write_updates,
    EstimateRow, TruthDiff, UpdateRecord,
};
