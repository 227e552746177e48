//! Built-in experiments.

use std::f64::consts::{FRAC_PI_3, FRAC_PI_4};

use projcons::{
    AngleSchedule, ConvexBody, DepthSchedule, GraphSpec, InitialCondition, OracleSpec, Point, SelectionPolicy,
};
use thiserror::Error;

use crate::config::{ExperimentConfig, SCHEMA_VERSION};

pub const PRESETS: [&str; 6] =
    ["three_disks", "thm2_nonconvergence", "prop2_ball", "prop2_singleton", "prop3_diverge", "thm1_harmonic"];

#[derive(Debug, Clone, PartialEq, Error)]
#[error("unknown preset {name:?}; valid presets: {}", PRESETS.join(", "))]
pub struct UnknownPreset {
    pub name: String,
}

/// Unit disks centred at (1,0), (-1,0), (0,-1). They meet only at the origin.
pub fn tangent_disks() -> Vec<ConvexBody> {
    [[1.0, 0.0], [-1.0, 0.0], [0.0, -1.0]].map(|c| ConvexBody::ball(c, 1.0).unwrap()).to_vec()
}

/// Unit disks centred at (0.5,0), (-0.5,0), (0,-0.5), with a full-dimensional
/// intersection.
pub fn overlapping_disks() -> Vec<ConvexBody> {
    [[0.5, 0.0], [-0.5, 0.0], [0.0, -0.5]].map(|c| ConvexBody::ball(c, 1.0).unwrap()).to_vec()
}

pub fn three_node_weights() -> Vec<Vec<f64>> {
    vec![vec![0.5, 0.25, 0.25], vec![0.25, 0.5, 0.25], vec![0.25, 0.25, 0.5]]
}

pub fn plane_grid_oracle() -> OracleSpec {
    OracleSpec::Grid { bounds: [[-2.0, 2.0], [-2.0, 2.0]], resolution: 1e-3 }
}

fn single_node() -> GraphSpec {
    GraphSpec::Static { weights: vec![vec![1.0]], eta: None }
}

fn unit_ball() -> ConvexBody {
    ConvexBody::ball([0.0, 0.0], 1.0).unwrap()
}

fn base(name: &str) -> ExperimentConfig {
    ExperimentConfig {
        schema_version: SCHEMA_VERSION,
        name: name.to_string(),
        dimension: 2,
        bodies: tangent_disks(),
        graph: GraphSpec::Static { weights: three_node_weights(), eta: None },
        policy: SelectionPolicy::Exact,
        theta: AngleSchedule::constant(0.0),
        alpha: DepthSchedule::constant(1.0),
        initial: InitialCondition::Shared { point: Point::from([1.8, 0.8]) },
        horizon: 2000,
        seed: 0,
        oracle: plane_grid_oracle(),
        record_stride: 1,
        output_dir: None,
        expect_divergence: false,
    }
}

pub fn preset(name: &str) -> Result<ExperimentConfig, UnknownPreset> {
    let mut c = base(name);
    match name {
        "three_disks" => {
            c.alpha = DepthSchedule::constant(0.5);
        }
        "thm2_nonconvergence" => {
            // α_k = 2^-(k+2), summing to 1/2
            c.alpha = DepthSchedule::Geometric { c: 0.25, ratio: 0.5 };
            c.initial = InitialCondition::Shared { point: Point::from([6.0, 6.0]) };
            c.horizon = 100;
        }
        "prop2_ball" => {
            c.bodies = vec![unit_ball()];
            c.graph = single_node();
            c.policy = SelectionPolicy::AdversarialFixedAngle;
            c.theta = AngleSchedule::constant(FRAC_PI_4);
            c.initial = InitialCondition::Shared { point: Point::from([4.0, 0.0]) };
            c.horizon = 100;
            c.oracle = OracleSpec::default();
        }
        "prop2_singleton" => {
            c.bodies = vec![ConvexBody::singleton([0.0, 0.0]).unwrap()];
            c.graph = single_node();
            c.policy = SelectionPolicy::AdversarialFixedAngle;
            c.theta = AngleSchedule::constant(FRAC_PI_4);
            c.initial = InitialCondition::Shared { point: Point::from([3.0, 0.0]) };
            c.horizon = 100;
            c.oracle = OracleSpec::default();
        }
        "prop3_diverge" => {
            c.bodies = vec![unit_ball()];
            c.graph = single_node();
            c.policy = SelectionPolicy::AdversarialFixedAngle;
            c.theta = AngleSchedule::constant(FRAC_PI_3);
            c.initial = InitialCondition::Shared { point: Point::from([6.0, 0.0]) };
            c.horizon = 200;
            c.oracle = OracleSpec::default();
            c.expect_divergence = true;
        }
        "thm1_harmonic" => {
            c.bodies = overlapping_disks();
            c.graph = GraphSpec::RandomUjsc { n: 3, window: 2, eta: 0.1, seed: 7, density: None };
            c.policy = SelectionPolicy::RandomInCone;
            c.theta = AngleSchedule::harmonic(1.0);
            c.alpha = DepthSchedule::Harmonic { c: 1.0 };
            c.initial = InitialCondition::PerNode {
                points: vec![Point::from([2.0, 2.0]), Point::from([-2.0, 1.5]), Point::from([1.5, -2.0])],
            };
            c.seed = 7;
            c.horizon = 2000;
            c.record_stride = 10;
            c.oracle = OracleSpec::default();
        }
        _ => return Err(UnknownPreset { name: name.to_string() }),
    }
    Ok(c)
}
