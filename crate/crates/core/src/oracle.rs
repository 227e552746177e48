//! Centralised ground truth for the distance to `X₀ = ⋂ X_i`, and
//! finite-horizon diagnostics for the schedule-sum hypotheses.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::convex::{dist, ConvexBody, GeometryError, Point, EPS};
use crate::schedule::{classify_product, AngleSchedule, DepthSchedule, SeriesClass};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("oracle needs at least one body")]
    NoBodies,
    #[error("bodies disagree on dimension: {expected} vs {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("alternating projection did not converge in {sweeps} sweeps")]
    NoConvergence { last: Point, sweeps: usize },
    #[error("grid oracle requires dimension 2, got {0}")]
    GridDimension(usize),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid oracle parameter: {0}")]
    InvalidParameter(String),
    #[error("no grid point at resolution {resolution} lies in every body")]
    ResolutionTooCoarse { resolution: f64 },
}

pub const DEFAULT_AP_TOL: f64 = 1e-10;
pub const DEFAULT_AP_MAX_SWEEPS: usize = 10_000_000;

fn default_tol() -> f64 {
    DEFAULT_AP_TOL
}

fn default_max_sweeps() -> usize {
    DEFAULT_AP_MAX_SWEEPS
}

/// How `|x|_{X₀}` is computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum OracleSpec {
    /// `|x - x_AP|` where `x_AP` is the limit of cyclic projections from `x`.
    /// An upper bound on the true distance.
    AlternatingProjection {
        #[serde(default = "default_tol")]
        tol: f64,
        #[serde(default = "default_max_sweeps")]
        max_sweeps: usize,
    },
    /// Minimum distance to the grid points lying in every body. Planar only.
    Grid { bounds: [[f64; 2]; 2], resolution: f64 },
}

impl Default for OracleSpec {
    fn default() -> Self {
        OracleSpec::AlternatingProjection { tol: DEFAULT_AP_TOL, max_sweeps: DEFAULT_AP_MAX_SWEEPS }
    }
}

#[derive(Debug, Clone)]
enum Method {
    AlternatingProjection { tol: f64, max_sweeps: usize },
    Grid { feasible: Vec<[f64; 2]> },
}

#[derive(Debug, Clone)]
pub struct IntersectionOracle {
    bodies: Vec<ConvexBody>,
    method: Method,
}

fn common_dimension(bodies: &[ConvexBody]) -> Result<usize, OracleError> {
    let first = bodies.first().ok_or(OracleError::NoBodies)?;
    let m = first.dim();
    for b in bodies {
        b.validate()?;
        if b.dim() != m {
            return Err(OracleError::DimensionMismatch { expected: m, found: b.dim() });
        }
    }
    Ok(m)
}

/// Cyclically applies `x ← P_{X₁}(⋯ P_{Xₙ}(x) ⋯)` until a sweep moves `x`
/// by less than `tol`.
///
/// The result lies in `X₁`. Its distance to the other bodies is only small,
/// not below `tol`: where the bodies meet tangentially, sweeps move `x` much
/// less than the zigzag between bodies.
pub fn alternating_projection_point(
    bodies: &[ConvexBody],
    x0: &Point,
    tol: f64,
    max_sweeps: usize,
) -> Result<Point, OracleError> {
    common_dimension(bodies)?;
    let mut x = x0.clone();
    let mut prev = x0.coords().to_vec();
    for _ in 0..max_sweeps {
        prev.copy_from_slice(x.coords());
        for b in bodies.iter().rev() {
            b.project_in_place(x.coords_mut())?;
        }
        if dist(&prev, x.coords()) < tol {
            return Ok(x);
        }
    }
    Err(OracleError::NoConvergence { last: x, sweeps: max_sweeps })
}

impl IntersectionOracle {
    /// Builds the oracle. The grid method enumerates its feasible points here,
    /// once, so queries only scan that set.
    pub fn new(spec: &OracleSpec, bodies: Vec<ConvexBody>) -> Result<Self, OracleError> {
        let m = common_dimension(&bodies)?;
        let method = match *spec {
            OracleSpec::AlternatingProjection { tol, max_sweeps } => {
                if !(tol > 0.0) || max_sweeps == 0 {
                    return Err(OracleError::InvalidParameter(format!(
                        "alternating projection needs tol > 0 and max_sweeps >= 1, got {tol}, {max_sweeps}"
                    )));
                }
                Method::AlternatingProjection { tol, max_sweeps }
            }
            OracleSpec::Grid { bounds, resolution } => {
                if m != 2 {
                    return Err(OracleError::GridDimension(m));
                }
                Method::Grid { feasible: feasible_grid(&bodies, bounds, resolution)? }
            }
        };
        Ok(IntersectionOracle { bodies, method })
    }

    pub fn bodies(&self) -> &[ConvexBody] {
        &self.bodies
    }

    pub fn dim(&self) -> usize {
        self.bodies[0].dim()
    }

    /// `|x|_{X₀}`: exact to grid resolution for the grid method, an upper
    /// bound for alternating projection.
    pub fn distance(&self, x: &Point) -> Result<f64, OracleError> {
        if x.dim() != self.dim() {
            return Err(GeometryError::DimensionMismatch { expected: self.dim(), found: x.dim() }.into());
        }
        match &self.method {
            Method::AlternatingProjection { tol, max_sweeps } => {
                let p = alternating_projection_point(&self.bodies, x, *tol, *max_sweeps)?;
                Ok(x.distance(&p))
            }
            Method::Grid { feasible } => {
                if self.contains_all(x)? {
                    return Ok(0.0);
                }
                let (a, b) = (x[0], x[1]);
                let d2 = feasible
                    .iter()
                    .map(|g| (g[0] - a).powi(2) + (g[1] - b).powi(2))
                    .fold(f64::INFINITY, f64::min);
                Ok(d2.sqrt())
            }
        }
    }

    fn contains_all(&self, x: &Point) -> Result<bool, OracleError> {
        for b in &self.bodies {
            if !b.contains(x, EPS)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn feasible_grid(bodies: &[ConvexBody], bounds: [[f64; 2]; 2], resolution: f64) -> Result<Vec<[f64; 2]>, OracleError> {
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(OracleError::InvalidGrid(format!("resolution {resolution} must be positive")));
    }
    let mut axes = Vec::with_capacity(2);
    for [lo, hi] in bounds {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(OracleError::InvalidGrid(format!("bounds [{lo}, {hi}] must satisfy lo < hi")));
        }
        let steps = ((hi - lo) / resolution).round() as usize;
        if steps == 0 {
            return Err(OracleError::ResolutionTooCoarse { resolution });
        }
        // index-based coordinates keep exact lattice values such as 0
        axes.push((0..=steps).map(|i| lo + (hi - lo) * i as f64 / steps as f64).collect::<Vec<_>>());
    }
    let mut feasible = Vec::new();
    let mut p = [0.0; 2];
    for &a in &axes[0] {
        for &b in &axes[1] {
            p[0] = a;
            p[1] = b;
            let mut inside = true;
            for body in bodies {
                if body.distance_slice(&p)? > EPS {
                    inside = false;
                    break;
                }
            }
            if inside {
                feasible.push(p);
            }
        }
    }
    if feasible.is_empty() {
        return Err(OracleError::ResolutionTooCoarse { resolution });
    }
    Ok(feasible)
}

/// Finite partial sums behind the schedule hypotheses, with the closed-form
/// class of the infinite sums where the family is known.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartialSums {
    pub horizon: usize,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub alpha_max_theta: f64,
    pub alpha_min_class: SeriesClass,
    pub alpha_max_class: SeriesClass,
    pub alpha_max_theta_class: SeriesClass,
}

/// `Σ_{k<K} α⁻_k`, `Σ_{k<K} α⁺_k` and `Σ_{k<K} α⁺_k θ_k` over `n` nodes.
pub fn partial_sums(depths: &DepthSchedule, angles: &AngleSchedule, n: usize, horizon: usize) -> PartialSums {
    let (mut lo, mut hi, mut hi_theta) = (0.0, 0.0, 0.0);
    for k in 0..horizon {
        let a_max = depths.max_at(n, k);
        lo += depths.min_at(n, k);
        hi += a_max;
        hi_theta += a_max * angles.at(k);
    }
    PartialSums {
        horizon,
        alpha_min: lo,
        alpha_max: hi,
        alpha_max_theta: hi_theta,
        alpha_min_class: depths.min_decay().classify(),
        alpha_max_class: depths.max_decay().classify(),
        alpha_max_theta_class: classify_product(depths.max_decay(), angles.decay()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disks() -> Vec<ConvexBody> {
        vec![
            ConvexBody::ball([1.0, 0.0], 1.0).unwrap(),
            ConvexBody::ball([-1.0, 0.0], 1.0).unwrap(),
            ConvexBody::ball([0.0, -1.0], 1.0).unwrap(),
        ]
    }

    fn grid_spec() -> OracleSpec {
        OracleSpec::Grid { bounds: [[-2.0, 2.0], [-2.0, 2.0]], resolution: 1e-3 }
    }

    #[test]
    fn single_body_is_one_projection() {
        let b = ConvexBody::ball([1.0, 0.0], 1.0).unwrap();
        let p = alternating_projection_point(&[b.clone()], &Point::from([3.0, 0.0]), 1e-10, 10).unwrap();
        assert_eq!(p, Point::from([2.0, 0.0]));
        let o = IntersectionOracle::new(&OracleSpec::default(), vec![b]).unwrap();
        assert!((o.distance(&Point::from([3.0, 0.0])).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn feasible_start_is_fixed() {
        let bodies = vec![ConvexBody::ball([0.5, 0.0], 1.0).unwrap(), ConvexBody::ball([-0.5, 0.0], 1.0).unwrap()];
        let x = Point::from([0.1, 0.2]);
        assert_eq!(alternating_projection_point(&bodies, &x, 1e-10, 5).unwrap(), x);
    }

    #[test]
    fn lens_apex_from_above() {
        let bodies = disks()[..2].to_vec();
        let p = alternating_projection_point(&bodies, &Point::from([0.0, 3.0]), 1e-10, DEFAULT_AP_MAX_SWEEPS)
            .unwrap();
        assert_eq!(bodies[0].distance(&p).unwrap(), 0.0);
        assert!(bodies[1].distance(&p).unwrap() <= 1e-6);
        assert!(p.norm() < 1e-3);
    }

    #[test]
    fn no_convergence_carries_last_iterate() {
        let bodies = disks()[..2].to_vec();
        match alternating_projection_point(&bodies, &Point::from([0.0, 3.0]), 1e-10, 3) {
            Err(OracleError::NoConvergence { last, sweeps: 3 }) => assert!(last.is_finite()),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn grid_on_tangent_disks_sees_only_origin() {
        let o = IntersectionOracle::new(&grid_spec(), disks()).unwrap();
        let x = Point::from([1.8, 0.8]);
        assert!((o.distance(&x).unwrap() - x.norm()).abs() < 1e-12);
        assert_eq!(o.distance(&Point::from([0.0, 0.0])).unwrap(), 0.0);
    }

    #[test]
    fn grid_and_alternating_projection_agree_at_sample_point() {
        let x = Point::from([1.8, 0.8]);
        let g = IntersectionOracle::new(&grid_spec(), disks()).unwrap().distance(&x).unwrap();
        let a = IntersectionOracle::new(&OracleSpec::default(), disks()).unwrap().distance(&x).unwrap();
        assert!((g - a).abs() <= 2e-3, "grid {g} vs ap {a}");
    }

    #[test]
    fn distance_dominates_each_body() {
        let o = IntersectionOracle::new(&grid_spec(), disks()).unwrap();
        for x in [[1.5, 1.5], [-0.3, 0.9], [0.0, -1.9], [2.0, -2.0]] {
            let x = Point::from(x);
            let d0 = o.distance(&x).unwrap();
            for b in disks() {
                assert!(d0 >= b.distance(&x).unwrap() - 1e-9);
            }
        }
    }

    #[test]
    fn grid_errors() {
        let far = vec![ConvexBody::ball([10.0, 10.0], 0.1).unwrap()];
        assert!(matches!(
            IntersectionOracle::new(&grid_spec(), far),
            Err(OracleError::ResolutionTooCoarse { .. })
        ));
        let cube = vec![ConvexBody::cuboid([0.0, 0.0, 0.0], [1.0, 1.0, 1.0]).unwrap()];
        assert_eq!(IntersectionOracle::new(&grid_spec(), cube).unwrap_err(), OracleError::GridDimension(3));
    }

    #[test]
    fn harmonic_depth_partial_sum() {
        let r = partial_sums(&DepthSchedule::Harmonic { c: 1.0 }, &AngleSchedule::harmonic(1.0), 3, 10_000);
        let h: f64 = (1..=10_000).map(|k| 1.0 / k as f64).sum();
        assert!((r.alpha_min - h).abs() < 1e-9);
        assert!((r.alpha_min - 9.7876).abs() < 1e-4);
        assert_eq!(r.alpha_min_class, SeriesClass::Divergent);
        assert_eq!(r.alpha_max_theta_class, SeriesClass::Summable { total: None });
    }

    #[test]
    fn geometric_depth_sums_to_half() {
        let d = DepthSchedule::Geometric { c: 0.25, ratio: 0.5 };
        let r = partial_sums(&d, &AngleSchedule::constant(0.0), 2, 60);
        assert!((r.alpha_max - 0.5).abs() < 1e-15);
        assert_eq!(r.alpha_max_class, SeriesClass::Summable { total: Some(0.5) });
        assert_eq!(r.alpha_max_theta, 0.0);
        assert_eq!(r.alpha_max_theta_class, SeriesClass::Summable { total: Some(0.0) });
    }

    #[test]
    fn spec_json() {
        let s: OracleSpec =
            serde_json::from_str(r#"{"method":"grid","bounds":[[-2,2],[-2,2]],"resolution":0.001}"#).unwrap();
        assert_eq!(s, grid_spec());
        let a: OracleSpec = serde_json::from_str(r#"{"method":"alternating_projection"}"#).unwrap();
        assert_eq!(a, OracleSpec::default());
    }
}
