use proptest::prelude::*;

use projcons::network::{check_phi_bound, check_ujsc, transition_product};
use projcons::{
    AngleSchedule, ConvexBody, DepthSchedule, GraphSchedule, InitialCondition, Point, RunConfig, SelectionPolicy,
    Simulation,
};

/// Balls that all contain the origin, so `0 ∈ X₀`.
fn balls_through_origin(n: usize) -> impl Strategy<Value = Vec<ConvexBody>> {
    prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64, 0.0..1.0f64), n).prop_map(|v| {
        v.into_iter()
            .map(|(a, b, slack)| {
                let r = a.hypot(b) + slack + 0.05;
                ConvexBody::ball([a, b], r).unwrap()
            })
            .collect()
    })
}

fn policy() -> impl Strategy<Value = SelectionPolicy> {
    prop_oneof![
        Just(SelectionPolicy::Exact),
        Just(SelectionPolicy::RandomInCone),
        Just(SelectionPolicy::AdversarialFixedAngle),
    ]
}

fn max_dist(points: &[Point], z: &Point) -> f64 {
    points.iter().map(|p| p.distance(z)).fold(0.0, f64::max)
}

fn config(bodies: Vec<ConvexBody>, theta: f64, alpha: f64, policy: SelectionPolicy, seed: u64) -> RunConfig {
    let n = bodies.len();
    RunConfig {
        bodies,
        graph: GraphSchedule::random_ujsc(n, 2, 0.1, seed).unwrap(),
        angles: AngleSchedule::constant(theta),
        depths: DepthSchedule::constant(alpha),
        policy,
        initial: InitialCondition::UniformBox { lower: Point::from([-20.0, -20.0]), upper: Point::from([20.0, 20.0]) },
        seed,
        record_stride: 1,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn envelope_grows_at_most_by_tangent_factor(
        bodies in (2usize..=5).prop_flat_map(balls_through_origin),
        theta in 0.0..1.4f64,
        alpha in 0.0..=1.0f64,
        policy in policy(),
        seed: u64,
    ) {
        let mut sim = Simulation::new(config(bodies, theta, alpha, policy, seed)).unwrap();
        let z = Point::from([0.0, 0.0]);
        let factor = 1.0 + alpha * theta.tan();
        for _ in 0..60 {
            let before = max_dist(&sim.state().points, &z);
            sim.advance().unwrap();
            if sim.diverged() {
                break;
            }
            let after = max_dist(&sim.state().points, &z);
            prop_assert!(after <= factor * before * (1.0 + 1e-12) + 1e-9, "{after} > {factor} * {before}");
        }
    }

    #[test]
    fn zero_angle_never_moves_away_from_common_points(
        bodies in (2usize..=5).prop_flat_map(balls_through_origin),
        alpha in 0.0..=1.0f64,
        seed: u64,
    ) {
        let mut sim = Simulation::new(config(bodies, 0.0, alpha, SelectionPolicy::RandomInCone, seed)).unwrap();
        let z = Point::from([0.0, 0.0]);
        let mut prev = max_dist(&sim.state().points, &z);
        for _ in 0..60 {
            sim.advance().unwrap();
            let now = max_dist(&sim.state().points, &z);
            prop_assert!(now <= prev * (1.0 + 1e-12) + 1e-12);
            prev = now;
        }
    }

    #[test]
    fn generated_schedules_are_ujsc_and_meet_the_product_bound(
        n in 2usize..=5,
        window in 1usize..=4,
        eta_frac in 0.2..=1.0f64,
        seed: u64,
        s in 0usize..50,
    ) {
        let eta = eta_frac / n as f64;
        let g = GraphSchedule::random_ujsc(n, window, eta, seed).unwrap();
        let span = (n - 1) * window;
        prop_assert!(check_ujsc(&g, window, s + span + window).unwrap());
        prop_assert!(check_phi_bound(&g, s, s + span - 1, eta, window).unwrap());
        let phi = transition_product(&g, s + span - 1, s).unwrap();
        for i in 0..n {
            prop_assert!((phi.row(i).sum() - 1.0).abs() < 1e-12);
        }
    }
}
