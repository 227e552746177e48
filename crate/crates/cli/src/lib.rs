//! Experiment harness: JSON configs, presets, run artifacts and paired
//! comparisons on top of the `projcons` engine.

pub mod compare;
pub mod config;
pub mod experiment;
pub mod preset;

pub use compare::{compare, CompareReport, GridSpec, Winner};
pub use config::{load_config, ExperimentConfig};
pub use experiment::{run_experiment, RunError, RunSummary};
pub use preset::{preset, PRESETS};
