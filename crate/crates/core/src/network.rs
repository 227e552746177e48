//! Time-varying directed communication graphs.
//!
//! Arc convention: entry `(i, j)` of a weight matrix is `a_ij > 0` iff `j` is
//! an in-neighbour of `i`, i.e. node `i` reads node `j`'s value. Every node
//! carries a self-loop and every row sums to one.

use std::collections::VecDeque;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::convex::EPS;
use crate::rng::{self, Domain};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("weight matrix must be square and nonempty, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("weight ({i}, {j}) = {value} is negative or non-finite")]
    BadWeight { i: usize, j: usize, value: f64 },
    #[error("node {0} has no self-loop")]
    MissingSelfLoop(usize),
    #[error("row {row} sums to {sum}, not 1")]
    RowSum { row: usize, sum: f64 },
    #[error("weight ({i}, {j}) = {value} is below the floor eta = {eta}")]
    BelowFloor { i: usize, j: usize, value: f64, eta: f64 },
    #[error("eta = {0} must lie in (0, 1)")]
    BadEta(f64),
    #[error("n = {n} nodes cannot all carry weight >= eta = {eta} (need n <= floor(1/eta))")]
    FloorInfeasible { n: usize, eta: f64 },
    #[error("periodic schedule needs at least one graph")]
    EmptyPeriod,
    #[error("graphs disagree on node count: {expected} vs {found}")]
    NodeCount { expected: usize, found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("transition product needs k >= s, got k = {k}, s = {s}")]
    ReversedInterval { k: usize, s: usize },
}

/// A weighted digraph with self-loops and row-stochastic weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Digraph {
    weights: DMatrix<f64>,
}

impl Digraph {
    pub fn new(weights: DMatrix<f64>) -> Result<Self, NetworkError> {
        let (rows, cols) = weights.shape();
        if rows != cols || rows == 0 {
            return Err(NetworkError::NotSquare { rows, cols });
        }
        for i in 0..rows {
            for j in 0..cols {
                let value = weights[(i, j)];
                if !(value.is_finite() && value >= 0.0) {
                    return Err(NetworkError::BadWeight { i, j, value });
                }
            }
            if weights[(i, i)] <= 0.0 {
                return Err(NetworkError::MissingSelfLoop(i));
            }
            let sum: f64 = weights.row(i).iter().sum();
            if (sum - 1.0).abs() > EPS {
                return Err(NetworkError::RowSum { row: i, sum });
            }
        }
        Ok(Digraph { weights })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, NetworkError> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(NetworkError::NotSquare { rows: n, cols: bad.len() });
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// The complete graph with uniform weights `1/n`.
    pub fn complete_uniform(n: usize) -> Result<Self, NetworkError> {
        Self::new(DMatrix::from_element(n, n, 1.0 / n as f64))
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    pub fn has_arc(&self, i: usize, j: usize) -> bool {
        self.weights[(i, j)] > 0.0
    }

    /// In-neighbours `j` of `i` with their weights `a_ij`.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.weights
            .row(i)
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, w)| *w > 0.0)
            .collect::<Vec<_>>()
            .into_iter()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n()).map(|i| self.weights.row(i).iter().copied().collect()).collect()
    }

    pub fn min_positive_weight(&self) -> f64 {
        self.weights.iter().copied().filter(|w| *w > 0.0).fold(f64::INFINITY, f64::min)
    }

    /// Every positive weight is at least `eta` (within `EPS`).
    pub fn check_floor(&self, eta: f64) -> Result<(), NetworkError> {
        let n = self.n();
        for i in 0..n {
            for j in 0..n {
                let value = self.weights[(i, j)];
                if value > 0.0 && value < eta - EPS {
                    return Err(NetworkError::BelowFloor { i, j, value, eta });
                }
            }
        }
        Ok(())
    }
}

fn adjacency_of(g: &Digraph) -> Vec<Vec<bool>> {
    let n = g.n();
    (0..n).map(|i| (0..n).map(|j| g.has_arc(i, j)).collect()).collect()
}

/// Strong connectivity of an adjacency matrix (`adj[i][j]`: `i` reads `j`).
pub fn is_strongly_connected(adj: &[Vec<bool>]) -> bool {
    let n = adj.len();
    let reach_all = |forward: bool| {
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                let arc = if forward { adj[u][v] } else { adj[v][u] };
                if arc && !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    n == 0 || (reach_all(true) && reach_all(false))
}

/// Seeded random schedule that is UJSC by construction.
///
/// One step per window of length `window` (at a seeded phase fixed for the
/// whole schedule) carries a random Hamiltonian cycle plus self-loops, so
/// every window of `window` consecutive steps contains a strongly connected
/// graph. All other steps carry self-loops plus random arcs, each present
/// with probability `density`. Row `i` with `d` in-neighbours gets weights
/// `eta + (1 - d eta) s_j`, where `s` is a seeded Dirichlet(1) draw.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomUjsc {
    n: usize,
    window: usize,
    eta: f64,
    seed: u64,
    density: f64,
    phase: usize,
}

pub const DEFAULT_DENSITY: f64 = 0.3;

impl RandomUjsc {
    pub fn new(n: usize, window: usize, eta: f64, seed: u64, density: f64) -> Result<Self, NetworkError> {
        if n == 0 {
            return Err(NetworkError::InvalidParameter("n must be >= 1".into()));
        }
        if window == 0 {
            return Err(NetworkError::InvalidParameter("window T must be >= 1".into()));
        }
        if !(eta > 0.0 && eta < 1.0) {
            return Err(NetworkError::BadEta(eta));
        }
        if n as f64 * eta > 1.0 + 1e-12 {
            return Err(NetworkError::FloorInfeasible { n, eta });
        }
        if !(0.0..=1.0).contains(&density) {
            return Err(NetworkError::InvalidParameter(format!("density {density} outside [0, 1]")));
        }
        let phase = rng::stream(seed, Domain::GraphPhase, 0).random_range(0..window);
        Ok(RandomUjsc { n, window, eta, seed, density, phase })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn digraph_at(&self, k: usize) -> Digraph {
        let n = self.n;
        let mut adj = vec![vec![false; n]; n];
        for (i, row) in adj.iter_mut().enumerate() {
            row[i] = true;
        }
        let mut step_rng = rng::stream(self.seed, Domain::GraphStep, k as u64);
        if k % self.window == self.phase {
            let block = (k / self.window) as u64;
            let mut cycle_rng = rng::stream(self.seed, Domain::GraphCycle, block);
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut cycle_rng);
            for t in 0..n {
                adj[order[t]][order[(t + 1) % n]] = true;
            }
        } else {
            for (i, row) in adj.iter_mut().enumerate() {
                for (j, arc) in row.iter_mut().enumerate() {
                    if i != j && step_rng.random::<f64>() < self.density {
                        *arc = true;
                    }
                }
            }
        }
        let mut weights = DMatrix::zeros(n, n);
        for (i, row) in adj.iter().enumerate() {
            let nbrs: Vec<usize> = (0..n).filter(|&j| row[j]).collect();
            let shares: Vec<f64> = nbrs.iter().map(|_| step_rng.sample::<f64, _>(Exp1)).collect();
            let total: f64 = shares.iter().sum();
            let free = 1.0 - nbrs.len() as f64 * self.eta;
            for (&j, s) in nbrs.iter().zip(&shares) {
                weights[(i, j)] = self.eta + free * s / total;
            }
        }
        Digraph::new(weights).expect("generator emits row-stochastic weights with self-loops")
    }
}

/// The sequence of communication graphs `G_k`.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphSchedule {
    Static { graph: Digraph, eta: f64 },
    Periodic { graphs: Vec<Digraph>, eta: f64 },
    RandomUjsc(RandomUjsc),
}

/// Serialisable description of a [`GraphSchedule`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphSpec {
    /// `eta` defaults to the smallest positive weight.
    Static {
        weights: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eta: Option<f64>,
    },
    /// `G_k = weights[k mod len]`.
    Periodic {
        weights: Vec<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eta: Option<f64>,
    },
    RandomUjsc {
        n: usize,
        #[serde(rename = "T")]
        window: usize,
        eta: f64,
        seed: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        density: Option<f64>,
    },
}

fn check_eta(eta: f64) -> Result<(), NetworkError> {
    if eta > 0.0 && eta < 1.0 || eta == 1.0 {
        Ok(())
    } else {
        Err(NetworkError::BadEta(eta))
    }
}

impl GraphSchedule {
    pub fn fixed(graph: Digraph) -> Self {
        let eta = graph.min_positive_weight();
        GraphSchedule::Static { graph, eta }
    }

    pub fn periodic(graphs: Vec<Digraph>) -> Result<Self, NetworkError> {
        let eta = graphs.iter().map(Digraph::min_positive_weight).fold(f64::INFINITY, f64::min);
        Self::periodic_with_floor(graphs, eta)
    }

    fn periodic_with_floor(graphs: Vec<Digraph>, eta: f64) -> Result<Self, NetworkError> {
        let Some(first) = graphs.first() else {
            return Err(NetworkError::EmptyPeriod);
        };
        let n = first.n();
        for g in &graphs {
            if g.n() != n {
                return Err(NetworkError::NodeCount { expected: n, found: g.n() });
            }
            g.check_floor(eta)?;
        }
        check_eta(eta)?;
        Ok(GraphSchedule::Periodic { graphs, eta })
    }

    pub fn random_ujsc(n: usize, window: usize, eta: f64, seed: u64) -> Result<Self, NetworkError> {
        Ok(GraphSchedule::RandomUjsc(RandomUjsc::new(n, window, eta, seed, DEFAULT_DENSITY)?))
    }

    /// Builds and validates the schedule (row sums, self-loops, weight floor).
    pub fn from_spec(spec: &GraphSpec) -> Result<Self, NetworkError> {
        match spec {
            GraphSpec::Static { weights, eta } => {
                let graph = Digraph::from_rows(weights)?;
                let eta = eta.unwrap_or_else(|| graph.min_positive_weight());
                check_eta(eta)?;
                graph.check_floor(eta)?;
                Ok(GraphSchedule::Static { graph, eta })
            }
            GraphSpec::Periodic { weights, eta } => {
                let graphs = weights.iter().map(|w| Digraph::from_rows(w)).collect::<Result<Vec<_>, _>>()?;
                match eta {
                    Some(eta) => Self::periodic_with_floor(graphs, *eta),
                    None => Self::periodic(graphs),
                }
            }
            GraphSpec::RandomUjsc { n, window, eta, seed, density } => Ok(GraphSchedule::RandomUjsc(
                RandomUjsc::new(*n, *window, *eta, *seed, density.unwrap_or(DEFAULT_DENSITY))?,
            )),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            GraphSchedule::Static { graph, .. } => graph.n(),
            GraphSchedule::Periodic { graphs, .. } => graphs[0].n(),
            GraphSchedule::RandomUjsc(r) => r.n,
        }
    }

    /// The weight floor `eta` every emitted graph respects.
    pub fn eta(&self) -> f64 {
        match self {
            GraphSchedule::Static { eta, .. } | GraphSchedule::Periodic { eta, .. } => *eta,
            GraphSchedule::RandomUjsc(r) => r.eta,
        }
    }

    /// `A(k)`. Deterministic in `k` (and the seed), independent of call order.
    pub fn weights_at(&self, k: usize) -> Digraph {
        match self {
            GraphSchedule::Static { graph, .. } => graph.clone(),
            GraphSchedule::Periodic { graphs, .. } => graphs[k % graphs.len()].clone(),
            GraphSchedule::RandomUjsc(r) => r.digraph_at(k),
        }
    }
}

/// Checks that every union graph over `[k, k + window)`, for window starts
/// `k` in `[0, horizon - window]`, is strongly connected.
///
/// UJSC is a property of the infinite sequence; this only certifies the
/// finite prefix up to `horizon`.
pub fn check_ujsc(schedule: &GraphSchedule, window: usize, horizon: usize) -> Result<bool, NetworkError> {
    if window == 0 || horizon < window {
        return Err(NetworkError::InvalidParameter(format!(
            "need 1 <= T <= horizon, got T = {window}, horizon = {horizon}"
        )));
    }
    let adjs: Vec<Vec<Vec<bool>>> = (0..horizon).map(|k| adjacency_of(&schedule.weights_at(k))).collect();
    let n = schedule.n();
    for start in 0..=horizon - window {
        let mut union = vec![vec![false; n]; n];
        for adj in &adjs[start..start + window] {
            for (u, a) in union.iter_mut().zip(adj) {
                for (x, y) in u.iter_mut().zip(a) {
                    *x |= *y;
                }
            }
        }
        if !is_strongly_connected(&union) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `Φ(k, s) = A(k) A(k-1) ⋯ A(s)`.
pub fn transition_product(schedule: &GraphSchedule, k: usize, s: usize) -> Result<DMatrix<f64>, NetworkError> {
    if k < s {
        return Err(NetworkError::ReversedInterval { k, s });
    }
    let mut phi = schedule.weights_at(s).weights().clone();
    for t in s + 1..=k {
        phi = schedule.weights_at(t).weights() * phi;
    }
    Ok(phi)
}

/// Checks `min_ij Φ(k, s)_ij >= eta^((n-1) T)` for `k >= s + (n-1) T - 1`.
///
/// The tolerance is relative (`eta^T̂ (1 - EPS)`): an absolute `EPS` would
/// swamp bounds such as `0.1^9`.
pub fn check_phi_bound(
    schedule: &GraphSchedule,
    s: usize,
    k: usize,
    eta: f64,
    window: usize,
) -> Result<bool, NetworkError> {
    let n = schedule.n();
    let span = (n - 1) * window;
    if k + 1 < s + span {
        return Err(NetworkError::InvalidParameter(format!(
            "need k >= s + (n-1)T - 1 = {}, got k = {k}",
            (s + span).saturating_sub(1)
        )));
    }
    let bound = eta.powi(span as i32);
    let phi = transition_product(schedule, k, s)?;
    Ok(phi.min() >= bound * (1.0 - EPS))
}
