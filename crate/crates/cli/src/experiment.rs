//! Running a configured experiment and writing its artifacts.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use projcons::{run, EngineError, IntersectionOracle, OracleError, Trace};
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("oracle setup failed: {0}")]
    Oracle(#[from] OracleError),
    #[error("run failed: {0}")]
    Engine(#[from] EngineError),
    #[error("cannot write {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("run diverged at step {steps} but the config does not expect divergence (artifacts in {dir})")]
    UnexpectedDivergence { steps: usize, dir: PathBuf },
}

impl RunError {
    /// 2 for invalid configs, 3 for unexpected divergence, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(ConfigError::Invalid(_)) | RunError::Config(ConfigError::Parse { .. }) => 2,
            RunError::UnexpectedDivergence { .. } => 3,
            _ => 1,
        }
    }
}

fn io_err(path: &Path, e: impl ToString) -> RunError {
    RunError::Io { path: path.to_path_buf(), message: e.to_string() }
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub name: String,
    pub seed: u64,
    pub config_hash: String,
    pub horizon: usize,
    pub steps: usize,
    pub records: usize,
    pub diverged: bool,
    pub expect_divergence: bool,
    pub initial_h: f64,
    pub final_h: f64,
    pub final_diameter: f64,
    pub wall_time_secs: f64,
}

/// SHA-256 of the compact JSON form of the config.
pub fn config_hash(config: &ExperimentConfig) -> String {
    hex::encode(Sha256::digest(config.canonical_json().as_bytes()))
}

/// Validates, runs and returns the trace, without touching the disk.
pub fn simulate(config: &ExperimentConfig, oracle: &IntersectionOracle) -> Result<Trace, RunError> {
    let run_config = config.to_run_config()?;
    Ok(run(&run_config, config.horizon, oracle)?)
}

pub fn build_oracle(config: &ExperimentConfig) -> Result<IntersectionOracle, RunError> {
    config.to_run_config()?;
    Ok(IntersectionOracle::new(&config.oracle, config.bodies.clone())?)
}

pub fn summarize(config: &ExperimentConfig, trace: &Trace, wall_time_secs: f64) -> RunSummary {
    let first = trace.first().expect("trace holds the initial state");
    let last = trace.last().expect("trace holds the initial state");
    RunSummary {
        name: config.name.clone(),
        seed: config.seed,
        config_hash: config_hash(config),
        horizon: config.horizon,
        steps: trace.steps,
        records: trace.records.len(),
        diverged: trace.diverged,
        expect_divergence: config.expect_divergence,
        initial_h: first.h,
        final_h: last.h,
        final_diameter: last.diameter,
        wall_time_secs,
    }
}

pub fn write_trace(trace: &Trace, path: &Path) -> Result<(), RunError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    trace.write_csv(BufWriter::new(file)).map_err(|e| io_err(path, e))
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), RunError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))? + "\n";
    fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Runs the experiment and writes `trace.csv`, `summary.json` and the
/// resolved `config.json` into `out_dir`.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<RunSummary, RunError> {
    let oracle = build_oracle(config)?;
    let start = Instant::now();
    let trace = simulate(config, &oracle)?;
    let summary = summarize(config, &trace, start.elapsed().as_secs_f64());

    fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    write_trace(&trace, &out_dir.join("trace.csv"))?;
    write_json(&summary, &out_dir.join("summary.json"))?;
    let config_path = out_dir.join("config.json");
    fs::write(&config_path, config.to_pretty_json()).map_err(|e| io_err(&config_path, e))?;
    log::info!(
        "{}: {} steps, h {} -> {}, diameter {}",
        config.name,
        summary.steps,
        summary.initial_h,
        summary.final_h,
        summary.final_diameter
    );

    if summary.diverged && !config.expect_divergence {
        return Err(RunError::UnexpectedDivergence { steps: summary.steps, dir: out_dir.to_path_buf() });
    }
    if config.expect_divergence && !summary.diverged {
        log::warn!("{}: divergence was expected but did not occur within {} steps", config.name, config.horizon);
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preset::preset;

    #[test]
    fn three_disks_writes_full_trace() {
        let dir = tempfile::tempdir().unwrap();
        let s = run_experiment(&preset("three_disks").unwrap(), dir.path()).unwrap();
        assert_eq!(s.records, 2001);
        let csv = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
        // header plus one row per node per record
        assert_eq!(csv.lines().count(), 1 + 3 * 2001);
        assert!(csv.starts_with("k,node_id,x_0,x_1,dist_own_set,dist_intersection,h,consensus_diameter\n"));
        let summary: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
        assert_eq!(summary["config_hash"].as_str().unwrap().len(), 64);
        assert_eq!(summary["diverged"], false);
    }

    #[test]
    fn expected_divergence_is_not_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let s = run_experiment(&preset("prop3_diverge").unwrap(), dir.path()).unwrap();
        assert!(s.diverged);
    }

    #[test]
    fn unexpected_divergence_exits_3() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = preset("prop3_diverge").unwrap();
        c.expect_divergence = false;
        let e = run_experiment(&c, dir.path()).unwrap_err();
        assert_eq!(e.exit_code(), 3);
        assert!(dir.path().join("trace.csv").exists());
    }

    #[test]
    fn harmonic_preset_makes_progress() {
        let dir = tempfile::tempdir().unwrap();
        let s = run_experiment(&preset("thm1_harmonic").unwrap(), dir.path()).unwrap();
        assert!(s.final_h < s.initial_h);
    }

    #[test]
    fn hash_tracks_config() {
        let a = preset("three_disks").unwrap();
        let mut b = a.clone();
        assert_eq!(config_hash(&a), config_hash(&b));
        b.seed = 1;
        assert_ne!(config_hash(&a), config_hash(&b));
    }
}
