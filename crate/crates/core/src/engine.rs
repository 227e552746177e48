//! The approximate projected consensus recursion
//! `x_i(k+1) = Σ_j a_ij(k) P^a_j(k)`.

use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::approx_proj::{approx_projection, SelectionPolicy};
use crate::convex::{ConvexBody, GeometryError, Point};
use crate::network::GraphSchedule;
use crate::oracle::{IntersectionOracle, OracleError};
use crate::rng::{self, Domain};
use crate::schedule::{AngleSchedule, DepthSchedule};
use crate::trace::{Trace, TraceRecord};

/// Any coordinate beyond this magnitude flags the run as diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// Standing hypothesis a configuration can violate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Assumption {
    /// Bodies are well-formed closed convex sets of a common dimension.
    A1,
    /// Row-stochastic weights with a positive floor.
    A2,
    /// Angles bounded by a cap below `π/2`.
    A4,
    /// Depths in `[0, 1]`.
    Depth,
    /// Node counts, initial points, stride.
    Setup,
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Assumption::A1 => "A1 (convex bodies)",
            Assumption::A2 => "A2 (weights)",
            Assumption::A4 => "A4 (angle cap)",
            Assumption::Depth => "depth schedule",
            Assumption::Setup => "setup",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub assumption: Assumption,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} violated: {}", self.assumption, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("invalid configuration:\n{}", .0.iter().map(|v| format!("  - {v}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Violation>),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("inconsistent inputs: {0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialCondition {
    PerNode { points: Vec<Point> },
    /// Every node starts at `point`.
    Shared { point: Point },
    /// Independent uniform draws from the box, seeded by the run seed.
    UniformBox { lower: Point, upper: Point },
}

impl InitialCondition {
    pub fn points(&self, n: usize, seed: u64) -> Result<Vec<Point>, EngineError> {
        match self {
            InitialCondition::PerNode { points } => {
                if points.len() != n {
                    return Err(EngineError::Inconsistent(format!(
                        "{} initial points for {n} nodes",
                        points.len()
                    )));
                }
                Ok(points.clone())
            }
            InitialCondition::Shared { point } => Ok(vec![point.clone(); n]),
            InitialCondition::UniformBox { lower, upper } => {
                if lower.dim() != upper.dim() || lower.coords().iter().zip(upper.coords()).any(|(l, u)| !(l <= u)) {
                    return Err(EngineError::Inconsistent("initial box needs lower <= upper".into()));
                }
                let mut r = rng::stream(seed, Domain::Initial, 0);
                Ok((0..n)
                    .map(|_| {
                        Point::new(
                            lower.coords().iter().zip(upper.coords()).map(|(l, u)| l + (u - l) * r.random::<f64>()).collect(),
                        )
                    })
                    .collect())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub step: usize,
    pub points: Vec<Point>,
}

impl NetworkState {
    /// Non-finite, or some coordinate beyond [`DIVERGENCE_LIMIT`].
    pub fn is_diverged(&self) -> bool {
        self.points.iter().any(|p| !p.is_finite() || p.max_abs() > DIVERGENCE_LIMIT)
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (p, a) in self.points.iter().enumerate() {
            for b in &self.points[p + 1..] {
                d = d.max(a.distance(b));
            }
        }
        d
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub bodies: Vec<ConvexBody>,
    pub graph: GraphSchedule,
    pub angles: AngleSchedule,
    pub depths: DepthSchedule,
    pub policy: SelectionPolicy,
    pub initial: InitialCondition,
    pub seed: u64,
    pub record_stride: usize,
}

impl RunConfig {
    /// Every violated hypothesis, not just the first.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |assumption, message: String| out.push(Violation { assumption, message });
        if self.bodies.is_empty() {
            push(Assumption::A1, "no bodies".into());
        }
        let m = self.bodies.first().map(ConvexBody::dim).unwrap_or(0);
        for (i, b) in self.bodies.iter().enumerate() {
            if let Err(e) = b.validate() {
                push(Assumption::A1, format!("body {i}: {e}"));
            } else if b.dim() != m {
                push(Assumption::A1, format!("body {i} has dimension {}, body 0 has {m}", b.dim()));
            }
        }
        let n = self.graph.n();
        if n != self.bodies.len() {
            push(Assumption::A2, format!("graph has {n} nodes but there are {} bodies", self.bodies.len()));
        }
        if let Err(e) = self.angles.validate() {
            push(Assumption::A4, e.to_string());
        }
        if let Err(e) = self.depths.validate(n) {
            push(Assumption::Depth, e.to_string());
        }
        if self.record_stride == 0 {
            push(Assumption::Setup, "record_stride must be >= 1".into());
        }
        match self.initial.points(n, self.seed) {
            Ok(points) => {
                for (i, p) in points.iter().enumerate() {
                    if p.dim() != m {
                        push(Assumption::Setup, format!("initial point {i} has dimension {}, bodies have {m}", p.dim()));
                    } else if !p.is_finite() {
                        push(Assumption::Setup, format!("initial point {i} is not finite"));
                    }
                }
            }
            Err(e) => push(Assumption::Setup, e.to_string()),
        }
        out
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(EngineError::Invalid(v))
        }
    }
}

/// `P^a_j(k)` for node `j`, drawn from that node's own stream.
#[allow(clippy::too_many_arguments)]
pub fn node_approx_projection<R: Rng + ?Sized>(
    node: usize,
    state: &NetworkState,
    bodies: &[ConvexBody],
    angles: &AngleSchedule,
    depths: &DepthSchedule,
    policy: SelectionPolicy,
    rng: &mut R,
) -> Result<Point, GeometryError> {
    let k = state.step;
    approx_projection(&bodies[node], &state.points[node], angles.at(k), depths.at(node, k), policy, rng)
}

/// One synchronous update. Each `P^a_j(k)` is computed once and shared by
/// every out-neighbour of `j`; `rngs[j]` is node `j`'s stream.
#[allow(clippy::too_many_arguments)]
pub fn step<R: Rng>(
    state: &NetworkState,
    bodies: &[ConvexBody],
    graph: &GraphSchedule,
    angles: &AngleSchedule,
    depths: &DepthSchedule,
    policy: SelectionPolicy,
    rngs: &mut [R],
) -> Result<NetworkState, EngineError> {
    let n = state.points.len();
    if bodies.len() != n || graph.n() != n || rngs.len() != n {
        return Err(EngineError::Inconsistent(format!(
            "{n} states, {} bodies, {} graph nodes, {} streams",
            bodies.len(),
            graph.n(),
            rngs.len()
        )));
    }
    let pa = rngs
        .iter_mut()
        .enumerate()
        .map(|(j, r)| node_approx_projection(j, state, bodies, angles, depths, policy, r))
        .collect::<Result<Vec<_>, _>>()?;
    let a = graph.weights_at(state.step);
    let m = state.points[0].dim();
    let points = (0..n)
        .map(|i| {
            let mut x = vec![0.0; m];
            for (j, w) in a.neighbors(i) {
                for (xc, pc) in x.iter_mut().zip(pa[j].coords()) {
                    *xc += w * pc;
                }
            }
            Point::new(x)
        })
        .collect();
    Ok(NetworkState { step: state.step + 1, points })
}

/// A run in progress: configuration, current state and per-node streams.
#[derive(Debug, Clone)]
pub struct Simulation {
    config: RunConfig,
    state: NetworkState,
    rngs: Vec<ChaCha8Rng>,
    diverged: bool,
}

impl Simulation {
    pub fn new(config: RunConfig) -> Result<Self, EngineError> {
        config.validate()?;
        let n = config.graph.n();
        let points = config.initial.points(n, config.seed)?;
        let rngs = (0..n).map(|i| rng::stream(config.seed, Domain::Node, i as u64)).collect();
        let state = NetworkState { step: 0, points };
        let diverged = state.is_diverged();
        Ok(Simulation { config, state, rngs, diverged })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn state(&self) -> &NetworkState {
        &self.state
    }

    pub fn diverged(&self) -> bool {
        self.diverged
    }

    /// Advances one step unless the run has diverged. Returns whether a step
    /// was taken.
    pub fn advance(&mut self) -> Result<bool, EngineError> {
        if self.diverged {
            return Ok(false);
        }
        let c = &self.config;
        self.state = step(&self.state, &c.bodies, &c.graph, &c.angles, &c.depths, c.policy, &mut self.rngs)?;
        self.diverged = self.state.is_diverged();
        Ok(true)
    }

    pub fn record(&self, oracle: &IntersectionOracle) -> Result<TraceRecord, EngineError> {
        let s = &self.state;
        let dist_own = s
            .points
            .iter()
            .zip(&self.config.bodies)
            .map(|(p, b)| b.distance(p))
            .collect::<Result<Vec<_>, _>>()?;
        let dist_intersection = if self.diverged {
            vec![f64::INFINITY; s.points.len()]
        } else {
            s.points.iter().map(|p| oracle.distance(p)).collect::<Result<Vec<_>, _>>()?
        };
        let h = dist_intersection.iter().copied().fold(0.0, f64::max);
        Ok(TraceRecord {
            k: s.step,
            points: s.points.clone(),
            dist_own,
            dist_intersection,
            h,
            diameter: s.diameter(),
        })
    }
}

/// Runs `horizon` steps, recording every `record_stride`-th step and the
/// final one. A diverged run stops early with its last state recorded.
pub fn run(config: &RunConfig, horizon: usize, oracle: &IntersectionOracle) -> Result<Trace, EngineError> {
    let mut sim = Simulation::new(config.clone())?;
    if oracle.dim() != sim.state.points[0].dim() {
        return Err(EngineError::Inconsistent("oracle and bodies differ in dimension".into()));
    }
    let stride = config.record_stride;
    let mut records = vec![sim.record(oracle)?];
    while sim.state.step < horizon && sim.advance()? {
        let k = sim.state.step;
        if k % stride == 0 || k == horizon || sim.diverged {
            records.push(sim.record(oracle)?);
        }
    }
    Ok(Trace {
        dimension: sim.state.points[0].dim(),
        records,
        diverged: sim.diverged,
        steps: sim.state.step,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4};

    use super::*;
    use crate::network::Digraph;
    use crate::oracle::OracleSpec;

    fn disks() -> Vec<ConvexBody> {
        vec![
            ConvexBody::ball([1.0, 0.0], 1.0).unwrap(),
            ConvexBody::ball([-1.0, 0.0], 1.0).unwrap(),
            ConvexBody::ball([0.0, -1.0], 1.0).unwrap(),
        ]
    }

    fn three_node_graph() -> GraphSchedule {
        GraphSchedule::fixed(
            Digraph::from_rows(&[vec![0.5, 0.25, 0.25], vec![0.25, 0.5, 0.25], vec![0.25, 0.25, 0.5]]).unwrap(),
        )
    }

    fn single(body: ConvexBody, x0: Point, theta: f64, policy: SelectionPolicy) -> RunConfig {
        RunConfig {
            bodies: vec![body],
            graph: GraphSchedule::fixed(Digraph::complete_uniform(1).unwrap()),
            angles: AngleSchedule::constant(theta),
            depths: DepthSchedule::constant(1.0),
            policy,
            initial: InitialCondition::Shared { point: x0 },
            seed: 1,
            record_stride: 1,
        }
    }

    fn tangent_disks_config(alpha: f64) -> RunConfig {
        RunConfig {
            bodies: disks(),
            graph: three_node_graph(),
            angles: AngleSchedule::constant(0.0),
            depths: DepthSchedule::constant(alpha),
            policy: SelectionPolicy::Exact,
            initial: InitialCondition::Shared { point: Point::from([1.8, 0.8]) },
            seed: 0,
            record_stride: 1,
        }
    }

    #[test]
    fn single_node_exact_step_is_projection() {
        let b = ConvexBody::ball([0.0, 0.0], 1.0).unwrap();
        let mut sim = Simulation::new(single(b, Point::from([3.0, 4.0]), 0.0, SelectionPolicy::Exact)).unwrap();
        sim.advance().unwrap();
        let x = &sim.state().points[0];
        assert!((x[0] - 0.6).abs() < 1e-15 && (x[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn three_disk_first_step() {
        let mut sim = Simulation::new(tangent_disks_config(0.5)).unwrap();
        sim.advance().unwrap();
        let x0 = Point::from([1.8, 0.8]);
        let pa: Vec<Point> = disks().iter().map(|b| x0.lerp(&b.project(&x0).unwrap(), 0.5)).collect();
        assert!((pa[0][0] - 1.75355).abs() < 1e-5 && (pa[0][1] - 0.75355).abs() < 1e-5);
        let want = &(&(&pa[0] * 0.5) + &(&pa[1] * 0.25)) + &(&pa[2] * 0.25);
        assert!(sim.state().points[0].distance(&want) < 1e-15);
    }

    #[test]
    fn adversarial_ball_step() {
        let b = ConvexBody::ball([0.0, 0.0], 1.0).unwrap();
        let mut sim = Simulation::new(single(b.clone(), Point::from([4.0, 0.0]), FRAC_PI_4, SelectionPolicy::AdversarialFixedAngle)).unwrap();
        sim.advance().unwrap();
        let d1 = b.distance(&sim.state().points[0]).unwrap();
        assert!((d1 - (10f64.sqrt() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn horizon_zero_records_initial_state() {
        let o = IntersectionOracle::new(&OracleSpec::default(), disks()).unwrap();
        let t = run(&tangent_disks_config(0.5), 0, &o).unwrap();
        assert_eq!(t.records.len(), 1);
        assert_eq!(t.steps, 0);
        assert!((t.records[0].h - Point::from([1.8, 0.8]).norm()).abs() < 1e-3);
    }

    #[test]
    fn stride_keeps_final_step() {
        let o = IntersectionOracle::new(&OracleSpec::Grid { bounds: [[-2.0, 2.0], [-2.0, 2.0]], resolution: 0.01 }, disks())
            .unwrap();
        let mut c = tangent_disks_config(0.5);
        c.record_stride = 4;
        let t = run(&c, 10, &o).unwrap();
        let ks: Vec<usize> = t.records.iter().map(|r| r.k).collect();
        assert_eq!(ks, vec![0, 4, 8, 10]);
    }

    #[test]
    fn divergence_halts_run() {
        let b = ConvexBody::ball([0.0, 0.0], 1.0).unwrap();
        let c = single(b.clone(), Point::from([6.0, 0.0]), FRAC_PI_3, SelectionPolicy::AdversarialFixedAngle);
        let o = IntersectionOracle::new(&OracleSpec::default(), vec![b]).unwrap();
        let t = run(&c, 500, &o).unwrap();
        assert!(t.diverged);
        assert!(t.steps < 500);
        assert_eq!(t.last().unwrap().k, t.steps);
    }

    #[test]
    fn plain_projected_consensus_special_case() {
        let mut sim = Simulation::new(tangent_disks_config(1.0)).unwrap();
        let a = [[0.5, 0.25, 0.25], [0.25, 0.5, 0.25], [0.25, 0.25, 0.5]];
        let mut x: Vec<[f64; 2]> = vec![[1.8, 0.8]; 3];
        let centers: [[f64; 2]; 3] = [[1.0, 0.0], [-1.0, 0.0], [0.0, -1.0]];
        for _ in 0..200 {
            let p: Vec<[f64; 2]> = x
                .iter()
                .zip(centers)
                .map(|(v, c)| {
                    let (dx, dy) = (v[0] - c[0], v[1] - c[1]);
                    let r = dx.hypot(dy);
                    if r <= 1.0 { *v } else { [c[0] + dx / r, c[1] + dy / r] }
                })
                .collect();
            x = (0..3)
                .map(|i| {
                    let mut s = [0.0; 2];
                    for j in 0..3 {
                        s[0] += a[i][j] * p[j][0];
                        s[1] += a[i][j] * p[j][1];
                    }
                    s
                })
                .collect();
            sim.advance().unwrap();
            for (got, want) in sim.state().points.iter().zip(&x) {
                assert!((got[0] - want[0]).abs() < 1e-12 && (got[1] - want[1]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn node_order_does_not_matter() {
        let mut c = tangent_disks_config(0.7);
        c.angles = AngleSchedule::constant(0.4);
        c.policy = SelectionPolicy::RandomInCone;
        c.graph = GraphSchedule::random_ujsc(3, 2, 0.1, 5).unwrap();
        let sim = Simulation::new(c.clone()).unwrap();
        let s = sim.state().clone();
        let mut fwd: Vec<ChaCha8Rng> = (0..3).map(|i| rng::stream(c.seed, Domain::Node, i)).collect();
        let mut rev = fwd.clone();
        let a: Vec<Point> = (0..3)
            .map(|j| node_approx_projection(j, &s, &c.bodies, &c.angles, &c.depths, c.policy, &mut fwd[j]).unwrap())
            .collect();
        let mut b: Vec<Point> = (0..3)
            .rev()
            .map(|j| node_approx_projection(j, &s, &c.bodies, &c.angles, &c.depths, c.policy, &mut rev[j]).unwrap())
            .collect();
        b.reverse();
        assert_eq!(a, b);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let mut c = tangent_disks_config(0.5);
        c.angles = AngleSchedule::constant(0.3);
        c.policy = SelectionPolicy::RandomInCone;
        c.initial = InitialCondition::UniformBox { lower: Point::from([-2.0, -2.0]), upper: Point::from([2.0, 2.0]) };
        let o = IntersectionOracle::new(&OracleSpec::Grid { bounds: [[-2.0, 2.0], [-2.0, 2.0]], resolution: 0.01 }, disks())
            .unwrap();
        assert_eq!(run(&c, 50, &o).unwrap(), run(&c, 50, &o).unwrap());
        let mut d = c.clone();
        d.seed = 99;
        assert_ne!(run(&c, 50, &o).unwrap(), run(&d, 50, &o).unwrap());
    }

    #[test]
    fn validation_names_assumptions() {
        let mut c = tangent_disks_config(0.5);
        c.angles = AngleSchedule::constant(1.6);
        c.depths = DepthSchedule::constant(1.5);
        c.bodies.pop();
        let found: Vec<Assumption> = c.violations().iter().map(|v| v.assumption).collect();
        assert!(found.contains(&Assumption::A4));
        assert!(found.contains(&Assumption::A2));
        assert!(found.contains(&Assumption::Depth));
        assert!(matches!(Simulation::new(c), Err(EngineError::Invalid(_))));
    }
}
