//! Experiment configuration files.

use std::fs;
use std::path::{Path, PathBuf};

use projcons::engine::{Assumption, Violation};
use projcons::{
    AngleSchedule, ConvexBody, DepthSchedule, GraphSchedule, GraphSpec, InitialCondition, OracleSpec, RunConfig,
    SelectionPolicy,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

fn default_stride() -> usize {
    1
}

/// One experiment: problem, algorithm parameters, run length and outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub name: String,
    pub dimension: usize,
    pub bodies: Vec<ConvexBody>,
    pub graph: GraphSpec,
    pub policy: SelectionPolicy,
    pub theta: AngleSchedule,
    pub alpha: DepthSchedule,
    pub initial: InitialCondition,
    pub horizon: usize,
    pub seed: u64,
    pub oracle: OracleSpec,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// Divergence is the expected outcome, so it does not fail the run.
    #[serde(default)]
    pub expect_divergence: bool,
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}:{column}: {message}")]
    Parse { path: PathBuf, line: usize, column: usize, message: String },
    #[error("invalid configuration:\n{}", .0.iter().map(|v| format!("  - {v}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Violation>),
}

impl ConfigError {
    pub fn violations(&self) -> &[Violation] {
        match self {
            ConfigError::Invalid(v) => v,
            _ => &[],
        }
    }
}

/// Reads and validates a JSON config.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    let config = parse_config(&text).map_err(|e| ConfigError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    config.to_run_config()?;
    Ok(config)
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, serde_json::Error> {
    serde_json::from_str(text)
}

fn violation(assumption: Assumption, message: impl Into<String>) -> Violation {
    Violation { assumption, message: message.into() }
}

impl ExperimentConfig {
    /// Builds the engine configuration, collecting every violated hypothesis.
    pub fn to_run_config(&self) -> Result<RunConfig, ConfigError> {
        let mut problems = Vec::new();
        if self.schema_version != SCHEMA_VERSION {
            problems.push(violation(
                Assumption::Setup,
                format!("schema_version {} unsupported (expected {SCHEMA_VERSION})", self.schema_version),
            ));
        }
        for (i, b) in self.bodies.iter().enumerate() {
            if b.validate().is_ok() && b.dim() != self.dimension {
                problems.push(violation(
                    Assumption::A1,
                    format!("body {i} has dimension {}, config declares {}", b.dim(), self.dimension),
                ));
            }
        }
        if self.horizon == 0 {
            problems.push(violation(Assumption::Setup, "horizon must be >= 1"));
        }
        let graph = match GraphSchedule::from_spec(&self.graph) {
            Ok(g) => Some(g),
            Err(e) => {
                problems.push(violation(Assumption::A2, e.to_string()));
                None
            }
        };
        if let Some(graph) = graph {
            let run = RunConfig {
                bodies: self.bodies.clone(),
                graph,
                angles: self.theta.clone(),
                depths: self.alpha.clone(),
                policy: self.policy,
                initial: self.initial.clone(),
                seed: self.seed,
                record_stride: self.record_stride,
            };
            problems.extend(run.violations());
            if problems.is_empty() {
                return Ok(run);
            }
        } else if let Err(e) = self.theta.validate() {
            problems.push(violation(Assumption::A4, e.to_string()));
        }
        Err(ConfigError::Invalid(problems))
    }

    /// Compact JSON, the input of the config hash.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn to_pretty_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }
}
