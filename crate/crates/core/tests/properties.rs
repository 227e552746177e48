use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use projcons::approx_proj::{
    approx_projection_parts, blend_components, in_cone, in_upper_halfspace, on_supporting_hyperplane,
};
use projcons::{ConvexBody, HalfSpace, Point, SelectionPolicy};

const TOL: f64 = 1e-9;

fn coords(m: usize, r: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-r..r, m)
}

fn ball(m: usize) -> impl Strategy<Value = ConvexBody> {
    (coords(m, 3.0), 0.1..3.0f64).prop_map(|(c, r)| ConvexBody::ball(Point::new(c), r).unwrap())
}

fn half_space(m: usize) -> impl Strategy<Value = ConvexBody> {
    (coords(m, 2.0), -2.0..2.0f64)
        .prop_filter("normal must be nonzero", |(a, _)| a.iter().map(|x| x * x).sum::<f64>() > 1e-2)
        .prop_map(|(a, b)| ConvexBody::half_space(Point::new(a), b).unwrap())
}

fn cuboid(m: usize) -> impl Strategy<Value = ConvexBody> {
    (coords(m, 3.0), prop::collection::vec(0.0..2.0f64, m)).prop_map(|(lo, w)| {
        let hi: Vec<f64> = lo.iter().zip(&w).map(|(l, w)| l + w).collect();
        ConvexBody::cuboid(Point::new(lo), Point::new(hi)).unwrap()
    })
}

fn singleton(m: usize) -> impl Strategy<Value = ConvexBody> {
    coords(m, 3.0).prop_map(|p| ConvexBody::singleton(Point::new(p)).unwrap())
}

/// A bounded polyhedron: a box cut by two random half-spaces through points
/// near its centre, so it stays nonempty.
fn polyhedron() -> impl Strategy<Value = ConvexBody> {
    (coords(2, 1.0), coords(2, 1.0), coords(2, 1.0)).prop_map(|(c, a1, a2)| {
        let mut hs = vec![
            HalfSpace::new(Point::from([1.0, 0.0]), c[0] + 1.0).unwrap(),
            HalfSpace::new(Point::from([-1.0, 0.0]), 1.0 - c[0]).unwrap(),
            HalfSpace::new(Point::from([0.0, 1.0]), c[1] + 1.0).unwrap(),
            HalfSpace::new(Point::from([0.0, -1.0]), 1.0 - c[1]).unwrap(),
        ];
        for a in [a1, a2] {
            if a[0].hypot(a[1]) > 0.1 {
                let offset = a[0] * c[0] + a[1] * c[1] + 0.2;
                hs.push(HalfSpace::new(Point::new(a), offset).unwrap());
            }
        }
        ConvexBody::polyhedron(hs).unwrap()
    })
}

fn any_body() -> impl Strategy<Value = ConvexBody> {
    (1usize..=4).prop_flat_map(|m| {
        prop_oneof![ball(m), half_space(m), cuboid(m), singleton(m)]
    })
}

fn body_and_points() -> impl Strategy<Value = (ConvexBody, Point, Point)> {
    prop_oneof![any_body(), polyhedron()].prop_flat_map(|b| {
        let m = b.dim();
        (Just(b), coords(m, 6.0), coords(m, 6.0)).prop_map(|(b, x, y)| (b, Point::new(x), Point::new(y)))
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 2000, max_global_rejects: 1 << 20, ..ProptestConfig::default() })]

    #[test]
    fn projection_is_idempotent((b, x, _) in body_and_points()) {
        let p = b.project(&x).unwrap();
        prop_assert!(b.project(&p).unwrap().distance(&p) <= TOL);
    }

    #[test]
    fn projection_is_non_expansive((b, x, y) in body_and_points()) {
        let (px, py) = (b.project(&x).unwrap(), b.project(&y).unwrap());
        prop_assert!(px.distance(&py) <= x.distance(&y) + TOL);
    }

    #[test]
    fn distance_is_one_lipschitz((b, x, y) in body_and_points()) {
        let gap = (b.distance(&x).unwrap() - b.distance(&y).unwrap()).abs();
        prop_assert!(gap <= x.distance(&y) + TOL);
    }

    #[test]
    fn projection_is_constant_on_segment_to_projection((b, x, _) in body_and_points(), lambda in 0.0..1.0f64) {
        let p = b.project(&x).unwrap();
        let q = b.project(&x.lerp(&p, 1.0 - lambda)).unwrap();
        prop_assert!(q.distance(&p) <= TOL);
    }

    #[test]
    fn distance_scales_along_segment((b, x, _) in body_and_points(), lambda in 0.0..=1.0f64) {
        let p = b.project(&x).unwrap();
        let z = x.lerp(&p, lambda);
        let want = (1.0 - lambda) * b.distance(&x).unwrap();
        prop_assert!((b.distance(&z).unwrap() - want).abs() <= TOL);
    }

    #[test]
    fn nested_balls_inequality(
        c in coords(3, 2.0),
        x in coords(3, 8.0),
        r0 in 0.05..2.0f64,
        extra in 0.01..2.0f64,
    ) {
        let inner = ConvexBody::ball(Point::new(c.clone()), r0).unwrap();
        let outer = ConvexBody::ball(Point::new(c), r0 + extra).unwrap();
        let x = Point::new(x);
        let px = outer.project(&x).unwrap();
        let lhs = inner.distance(&px).unwrap().powi(2) + outer.distance(&x).unwrap().powi(2);
        prop_assert!(lhs <= inner.distance(&x).unwrap().powi(2) + TOL);
    }

    #[test]
    fn contains_matches_distance((b, x, _) in body_and_points(), tol in 0.0..0.5f64) {
        prop_assert_eq!(b.contains(&x, tol).unwrap(), b.distance(&x).unwrap() <= tol);
    }

    #[test]
    fn approximate_projection_membership(
        (b, v, _) in body_and_points(),
        theta in 0.0..1.5f64,
        alpha in 0.0..=1.0f64,
        policy in prop_oneof![
            Just(SelectionPolicy::Exact),
            Just(SelectionPolicy::RandomInCone),
            Just(SelectionPolicy::AdversarialFixedAngle),
        ],
        seed: u64,
    ) {
        prop_assume!(b.distance(&v).unwrap() > 1e-6);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let parts = approx_projection_parts(&b, &v, theta, alpha, policy, &mut rng).unwrap();
        prop_assert!(in_cone(&b, &v, &parts.point, theta).unwrap());
        prop_assert!(in_upper_halfspace(&b, &v, &parts.point).unwrap());
        prop_assert!(in_cone(&b, &v, &parts.supporting, theta).unwrap());
        prop_assert!(on_supporting_hyperplane(&b, &v, &parts.supporting).unwrap());
        let p = b.project(&v).unwrap();
        let gap = b.distance(&v).unwrap();
        prop_assert!(parts.supporting.distance(&p) <= theta.tan() * gap + TOL);
    }

    #[test]
    fn blend_is_recoverable(
        (b, v, _) in body_and_points(),
        theta in 0.0..1.2f64,
        alpha in 0.05..=1.0f64,
        seed: u64,
    ) {
        prop_assume!(b.distance(&v).unwrap() > 1e-3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let parts = approx_projection_parts(&b, &v, theta, alpha, SelectionPolicy::RandomInCone, &mut rng).unwrap();
        let (a, psa) = blend_components(&b, &v, &parts.point).unwrap().unwrap();
        prop_assert!((a - alpha).abs() <= 1e-7);
        prop_assert!(psa.distance(&parts.supporting) <= 1e-7);
    }

    #[test]
    fn exact_full_depth_is_projection((b, v, _) in body_and_points(), seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let parts = approx_projection_parts(&b, &v, 0.0, 1.0, SelectionPolicy::Exact, &mut rng).unwrap();
        prop_assert_eq!(parts.point, b.project(&v).unwrap());
    }
}
