//! Paired runs compared on `h` at the final step.

use std::path::Path;
use std::str::FromStr;

use projcons::{InitialCondition, IntersectionOracle, Point};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::ExperimentConfig;
use crate::experiment::{build_oracle, simulate, write_json, RunError};

#[derive(Debug, Error)]
pub enum CompareError {
    #[error("configs are not comparable: {0}")]
    Mismatch(String),
    #[error("bad grid spec {spec:?}: {reason} (expected START:STEP:COUNT)")]
    Grid { spec: String, reason: String },
    #[error(transparent)]
    Run(#[from] RunError),
}

impl CompareError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CompareError::Run(e) => e.exit_code(),
            _ => 2,
        }
    }
}

/// `COUNT` equally spaced values `START + i * STEP` per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub step: f64,
    pub count: usize,
}

impl FromStr for GridSpec {
    type Err = CompareError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |reason: &str| CompareError::Grid { spec: s.to_string(), reason: reason.to_string() };
        let parts: Vec<&str> = s.split(':').collect();
        let [start, step, count] = parts[..] else {
            return Err(bad("need three fields"));
        };
        let start: f64 = start.trim().parse().map_err(|_| bad("START is not a number"))?;
        let step: f64 = step.trim().parse().map_err(|_| bad("STEP is not a number"))?;
        let count: usize = count.trim().parse().map_err(|_| bad("COUNT is not a positive integer"))?;
        if !(start.is_finite() && step.is_finite() && step > 0.0) || count == 0 {
            return Err(bad("need finite START, STEP > 0 and COUNT >= 1"));
        }
        Ok(GridSpec { start, step, count })
    }
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.start + self.step * i as f64).collect()
    }

    /// Row-major over `(x_0, x_1)`.
    pub fn points(&self) -> Vec<Point> {
        let v = self.values();
        v.iter().flat_map(|&a| v.iter().map(move |&b| Point::from([a, b]))).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Winner {
    A,
    B,
    Tie,
}

/// Strictly smaller final `h` wins.
pub fn winner(h_a: f64, h_b: f64) -> Winner {
    if h_a < h_b {
        Winner::A
    } else if h_b < h_a {
        Winner::B
    } else {
        Winner::Tie
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub initial: Point,
    pub h_a: f64,
    pub h_b: f64,
    pub winner: Winner,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareReport {
    pub a: String,
    pub b: String,
    pub metric: &'static str,
    pub horizon: usize,
    pub wins_a: usize,
    pub wins_b: usize,
    pub ties: usize,
    pub cells: Vec<Cell>,
}

fn check_comparable(a: &ExperimentConfig, b: &ExperimentConfig) -> Result<(), CompareError> {
    let mut diffs = Vec::new();
    if a.bodies != b.bodies {
        diffs.push("bodies");
    }
    if a.graph != b.graph {
        diffs.push("graph");
    }
    if a.horizon != b.horizon {
        diffs.push("horizon");
    }
    if a.initial != b.initial {
        diffs.push("initial conditions");
    }
    if diffs.is_empty() {
        Ok(())
    } else {
        Err(CompareError::Mismatch(format!("they differ in {}", diffs.join(", "))))
    }
}

fn final_h(config: &ExperimentConfig, oracle: &IntersectionOracle) -> Result<f64, RunError> {
    let mut c = config.clone();
    c.record_stride = c.horizon.max(1);
    let trace = simulate(&c, oracle)?;
    Ok(trace.last().expect("trace holds the initial state").h)
}

/// Runs both configs from their shared initial condition, or from every
/// shared starting point of `grid` (planar only), and reports the winner per
/// cell on `h` at the final step.
pub fn compare(
    a: &ExperimentConfig,
    b: &ExperimentConfig,
    grid: Option<GridSpec>,
) -> Result<CompareReport, CompareError> {
    check_comparable(a, b)?;
    let oracle = build_oracle(a)?;
    b.to_run_config().map_err(RunError::from)?;
    let initials: Vec<Option<Point>> = match grid {
        None => vec![None],
        Some(g) => {
            if a.dimension != 2 {
                return Err(CompareError::Mismatch(format!("grid sweeps need dimension 2, got {}", a.dimension)));
            }
            g.points().into_iter().map(Some).collect()
        }
    };
    let cells = initials
        .into_par_iter()
        .map(|start| {
            let (mut ca, mut cb) = (a.clone(), b.clone());
            if let Some(p) = &start {
                ca.initial = InitialCondition::Shared { point: p.clone() };
                cb.initial = ca.initial.clone();
            }
            let h_a = final_h(&ca, &oracle)?;
            let h_b = final_h(&cb, &oracle)?;
            let initial = match start {
                Some(p) => p,
                None => {
                    let run = ca.to_run_config()?;
                    run.initial.points(run.graph.n(), run.seed).map_err(RunError::from)?.remove(0)
                }
            };
            Ok(Cell { initial, h_a, h_b, winner: winner(h_a, h_b) })
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    let count = |w| cells.iter().filter(|c| c.winner == w).count();
    Ok(CompareReport {
        a: a.name.clone(),
        b: b.name.clone(),
        metric: "h_at_final",
        horizon: a.horizon,
        wins_a: count(Winner::A),
        wins_b: count(Winner::B),
        ties: count(Winner::Tie),
        cells,
    })
}

/// Writes `compare.csv` (one row per starting point) and `compare.json`.
pub fn write_report(report: &CompareReport, out_dir: &Path) -> Result<(), RunError> {
    let io = |path: &Path, e: &dyn std::fmt::Display| RunError::Io { path: path.to_path_buf(), message: e.to_string() };
    std::fs::create_dir_all(out_dir).map_err(|e| io(out_dir, &e))?;
    let path = out_dir.join("compare.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| io(&path, &e))?;
    let dim = report.cells.first().map_or(0, |c| c.initial.dim());
    let mut header: Vec<String> = (0..dim).map(|i| format!("x_{i}")).collect();
    header.extend(["h_a", "h_b", "h_diff", "winner"].map(String::from));
    w.write_record(&header).map_err(|e| io(&path, &e))?;
    for c in &report.cells {
        let mut row: Vec<String> = c.initial.coords().iter().map(|x| x.to_string()).collect();
        row.push(c.h_a.to_string());
        row.push(c.h_b.to_string());
        row.push((c.h_a - c.h_b).to_string());
        row.push(match c.winner {
            Winner::A => "a",
            Winner::B => "b",
            Winner::Tie => "tie",
        }
        .to_string());
        w.write_record(&row).map_err(|e| io(&path, &e))?;
    }
    w.flush().map_err(|e| io(&path, &e))?;
    write_json(report, &out_dir.join("compare.json"))
}
