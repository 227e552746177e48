//! Closed convex bodies with exact Euclidean projection.
//!
//! All shapes are closed and convex by construction. Projection onto a
//! [`ConvexBody::Polyhedron`] has no closed form and runs Dykstra's cyclic
//! correction over the constituent half-spaces; its result is exact to the
//! Dykstra stopping tolerance.

use std::ops::{Add, Index, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Global geometric tolerance for membership and equality checks.
pub const EPS: f64 = 1e-9;

/// Dykstra stops once a full sweep moves the iterate less than this.
pub const DYKSTRA_TOL: f64 = 1e-12;
pub const DYKSTRA_MAX_SWEEPS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid body: {0}")]
    InvalidBody(String),
    #[error("polyhedron projection did not converge within {sweeps} sweeps (is the polyhedron empty?)")]
    NoConvergence { sweeps: usize },
    #[error("point lies in the body, where the approximate projection cone is undefined")]
    InteriorPoint,
    #[error("approximation angle {0} outside [0, pi/2)")]
    InvalidAngle(f64),
    #[error("projection depth {0} outside [0, 1]")]
    InvalidDepth(f64),
}

/// A state vector in `R^m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Self {
        Point(coords)
    }

    pub fn zeros(dim: usize) -> Self {
        Point(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn coords_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dot(&self, other: &Point) -> f64 {
        dot(&self.0, &other.0)
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn distance(&self, other: &Point) -> f64 {
        dist(&self.0, &other.0)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |acc, c| acc.max(c.abs()))
    }

    /// `(1 - t) * self + t * other`.
    pub fn lerp(&self, other: &Point, t: f64) -> Point {
        Point(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| (1.0 - t) * a + t * b)
                .collect(),
        )
    }

    /// `self + s * dir`.
    pub fn add_scaled(&self, s: f64, dir: &Point) -> Point {
        Point(self.0.iter().zip(&dir.0).map(|(a, d)| a + s * d).collect())
    }
}

impl From<Vec<f64>> for Point {
    fn from(v: Vec<f64>) -> Self {
        Point(v)
    }
}

impl<const N: usize> From<[f64; N]> for Point {
    fn from(v: [f64; N]) -> Self {
        Point(v.to_vec())
    }
}

impl Index<usize> for Point {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for &Point {
    type Output = Point;

    fn add(self, rhs: &Point) -> Point {
        Point(self.0.iter().zip(&rhs.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &Point {
    type Output = Point;

    fn sub(self, rhs: &Point) -> Point {
        Point(self.0.iter().zip(&rhs.0).map(|(a, b)| a - b).collect())
    }
}

impl Mul<f64> for &Point {
    type Output = Point;

    fn mul(self, s: f64) -> Point {
        Point(self.0.iter().map(|a| a * s).collect())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// The closed half-space `{z : <normal, z> <= offset}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace {
    pub normal: Point,
    pub offset: f64,
}

impl HalfSpace {
    pub fn new(normal: Point, offset: f64) -> Result<Self, GeometryError> {
        let h = HalfSpace { normal, offset };
        h.validate()?;
        Ok(h)
    }

    pub fn dim(&self) -> usize {
        self.normal.dim()
    }

    fn validate(&self) -> Result<(), GeometryError> {
        check_coords("half-space normal", &self.normal)?;
        if !self.offset.is_finite() {
            return Err(GeometryError::InvalidBody(
                "half-space offset must be finite".into(),
            ));
        }
        if !(self.normal.norm() > 0.0) {
            return Err(GeometryError::InvalidBody(
                "half-space normal must be nonzero".into(),
            ));
        }
        Ok(())
    }

    fn violation(&self, v: &[f64]) -> f64 {
        dot(self.normal.coords(), v) - self.offset
    }

    fn project_in_place(&self, v: &mut [f64]) {
        let excess = self.violation(v);
        if excess > 0.0 {
            let a = self.normal.coords();
            let s = excess / dot(a, a);
            for (vi, ai) in v.iter_mut().zip(a) {
                *vi -= s * ai;
            }
        }
    }
}

/// A closed convex set with exact projection support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum ConvexBody {
    Ball { center: Point, radius: f64 },
    HalfSpace(HalfSpace),
    Box { lower: Point, upper: Point },
    Singleton { point: Point },
    Polyhedron { halfspaces: Vec<HalfSpace> },
}

fn check_coords(what: &str, p: &Point) -> Result<(), GeometryError> {
    if p.dim() == 0 {
        return Err(GeometryError::InvalidBody(format!("{what} has dimension 0")));
    }
    if !p.is_finite() {
        return Err(GeometryError::InvalidBody(format!(
            "{what} has non-finite coordinates"
        )));
    }
    Ok(())
}

impl ConvexBody {
    pub fn ball(center: impl Into<Point>, radius: f64) -> Result<Self, GeometryError> {
        let b = ConvexBody::Ball { center: center.into(), radius };
        b.validate()?;
        Ok(b)
    }

    pub fn half_space(normal: impl Into<Point>, offset: f64) -> Result<Self, GeometryError> {
        Ok(ConvexBody::HalfSpace(HalfSpace::new(normal.into(), offset)?))
    }

    pub fn cuboid(lower: impl Into<Point>, upper: impl Into<Point>) -> Result<Self, GeometryError> {
        let b = ConvexBody::Box { lower: lower.into(), upper: upper.into() };
        b.validate()?;
        Ok(b)
    }

    pub fn singleton(point: impl Into<Point>) -> Result<Self, GeometryError> {
        let b = ConvexBody::Singleton { point: point.into() };
        b.validate()?;
        Ok(b)
    }

    pub fn polyhedron(halfspaces: Vec<HalfSpace>) -> Result<Self, GeometryError> {
        let b = ConvexBody::Polyhedron { halfspaces };
        b.validate()?;
        Ok(b)
    }

    /// Ambient dimension `m`.
    pub fn dim(&self) -> usize {
        match self {
            ConvexBody::Ball { center, .. } => center.dim(),
            ConvexBody::HalfSpace(h) => h.dim(),
            ConvexBody::Box { lower, .. } => lower.dim(),
            ConvexBody::Singleton { point } => point.dim(),
            ConvexBody::Polyhedron { halfspaces } => halfspaces.first().map_or(0, HalfSpace::dim),
        }
    }

    /// Checks the shape's well-formedness: positive radius, nonzero normals,
    /// ordered box corners, consistent dimensions, finite data.
    pub fn validate(&self) -> Result<(), GeometryError> {
        match self {
            ConvexBody::Ball { center, radius } => {
                check_coords("ball center", center)?;
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(GeometryError::InvalidBody(format!(
                        "ball radius must be positive and finite, got {radius}"
                    )));
                }
            }
            ConvexBody::HalfSpace(h) => h.validate()?,
            ConvexBody::Box { lower, upper } => {
                check_coords("box lower corner", lower)?;
                check_coords("box upper corner", upper)?;
                if lower.dim() != upper.dim() {
                    return Err(GeometryError::DimensionMismatch {
                        expected: lower.dim(),
                        found: upper.dim(),
                    });
                }
                if lower.coords().iter().zip(upper.coords()).any(|(l, u)| l > u) {
                    return Err(GeometryError::InvalidBody(
                        "box lower corner exceeds upper corner".into(),
                    ));
                }
            }
            ConvexBody::Singleton { point } => check_coords("singleton point", point)?,
            ConvexBody::Polyhedron { halfspaces } => {
                let Some(first) = halfspaces.first() else {
                    return Err(GeometryError::InvalidBody(
                        "polyhedron needs at least one half-space".into(),
                    ));
                };
                for h in halfspaces {
                    h.validate()?;
                    if h.dim() != first.dim() {
                        return Err(GeometryError::DimensionMismatch {
                            expected: first.dim(),
                            found: h.dim(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    fn check_dim(&self, found: usize) -> Result<(), GeometryError> {
        let expected = self.dim();
        if expected != found {
            return Err(GeometryError::DimensionMismatch { expected, found });
        }
        Ok(())
    }

    /// The nearest point of the body to `v`.
    pub fn project(&self, v: &Point) -> Result<Point, GeometryError> {
        let mut out = v.clone();
        self.project_in_place(out.coords_mut())?;
        Ok(out)
    }

    /// Overwrites `v` with its projection. Allocation-free except for
    /// polyhedra.
    pub fn project_in_place(&self, v: &mut [f64]) -> Result<(), GeometryError> {
        self.check_dim(v.len())?;
        match self {
            ConvexBody::Ball { center, radius } => {
                let c = center.coords();
                let r = dist(v, c);
                if r > *radius {
                    let s = radius / r;
                    for (vi, ci) in v.iter_mut().zip(c) {
                        *vi = ci + (*vi - ci) * s;
                    }
                }
            }
            ConvexBody::HalfSpace(h) => h.project_in_place(v),
            ConvexBody::Box { lower, upper } => {
                for ((vi, l), u) in v.iter_mut().zip(lower.coords()).zip(upper.coords()) {
                    *vi = vi.clamp(*l, *u);
                }
            }
            ConvexBody::Singleton { point } => v.copy_from_slice(point.coords()),
            ConvexBody::Polyhedron { halfspaces } => dykstra(halfspaces, v)?,
        }
        Ok(())
    }

    /// `|v|_K = |v - P_K(v)|`.
    pub fn distance(&self, v: &Point) -> Result<f64, GeometryError> {
        self.distance_slice(v.coords())
    }

    pub fn distance_slice(&self, v: &[f64]) -> Result<f64, GeometryError> {
        self.check_dim(v.len())?;
        let d = match self {
            ConvexBody::Ball { center, radius } => (dist(v, center.coords()) - radius).max(0.0),
            ConvexBody::HalfSpace(h) => h.violation(v).max(0.0) / h.normal.norm(),
            ConvexBody::Box { lower, upper } => v
                .iter()
                .zip(lower.coords())
                .zip(upper.coords())
                .map(|((x, l), u)| {
                    let e = (l - x).max(x - u).max(0.0);
                    e * e
                })
                .sum::<f64>()
                .sqrt(),
            ConvexBody::Singleton { point } => dist(v, point.coords()),
            ConvexBody::Polyhedron { .. } => {
                let mut p = v.to_vec();
                self.project_in_place(&mut p)?;
                dist(v, &p)
            }
        };
        Ok(d)
    }

    /// True iff `distance(v) <= tol`.
    pub fn contains(&self, v: &Point, tol: f64) -> Result<bool, GeometryError> {
        Ok(self.distance(v)? <= tol)
    }

    pub fn contains_slice(&self, v: &[f64], tol: f64) -> Result<bool, GeometryError> {
        Ok(self.distance_slice(v)? <= tol)
    }
}

/// Sweeps between attempts to finish Dykstra with an exact active-set solve.
const POLISH_EVERY: usize = 1000;
/// Constraints within this slack of the iterate are candidates for the
/// active set.
const ACTIVE_SLACK: f64 = 1e-4;
const MAX_ACTIVE_CANDIDATES: usize = 12;

/// Dykstra's alternating projection onto an intersection of half-spaces.
///
/// The iterate only picks the active-set guess: every
/// [`POLISH_EVERY`] sweeps, and on convergence, the equality-constrained
/// projection onto each small subset of near-active constraints is tried and
/// accepted if it satisfies the optimality conditions, which makes the result
/// exact and also rescues the slow phases Dykstra can enter near degenerate
/// vertices.
fn dykstra(halfspaces: &[HalfSpace], v: &mut [f64]) -> Result<(), GeometryError> {
    let m = v.len();
    if halfspaces.iter().all(|h| h.violation(v) <= 0.0) {
        return Ok(());
    }
    let origin = v.to_vec();
    let mut increments = vec![0.0; halfspaces.len() * m];
    let mut x = v.to_vec();
    let mut y = vec![0.0; m];
    let mut prev = vec![0.0; m];
    let mut prev_increments = increments.clone();
    for sweep in 1..=DYKSTRA_MAX_SWEEPS {
        prev.copy_from_slice(&x);
        prev_increments.copy_from_slice(&increments);
        for (h, inc) in halfspaces.iter().zip(increments.chunks_mut(m)) {
            for ((yi, xi), pi) in y.iter_mut().zip(&x).zip(inc.iter()) {
                *yi = xi + pi;
            }
            x.copy_from_slice(&y);
            h.project_in_place(&mut x);
            for ((pi, yi), xi) in inc.iter_mut().zip(&y).zip(&x) {
                *pi = yi - xi;
            }
        }
        // x alone can stall while the corrections are still moving
        let moved = dist(&x, &prev) + dist(&increments, &prev_increments);
        let feasible = halfspaces.iter().all(|h| h.violation(&x) <= EPS * h.normal.norm());
        let converged = feasible && moved < DYKSTRA_TOL;
        if converged || sweep % POLISH_EVERY == 0 {
            if let Some(p) = active_set_projection(halfspaces, &origin, &x) {
                v.copy_from_slice(&p);
                return Ok(());
            }
        }
        if converged {
            v.copy_from_slice(&x);
            return Ok(());
        }
    }
    Err(GeometryError::NoConvergence { sweeps: DYKSTRA_MAX_SWEEPS })
}

/// Exact projection of `v` if some subset of the constraints near `guess`
/// is the optimal active set.
fn active_set_projection(halfspaces: &[HalfSpace], v: &[f64], guess: &[f64]) -> Option<Vec<f64>> {
    let m = v.len();
    let candidates: Vec<usize> = (0..halfspaces.len())
        .filter(|&i| {
            let h = &halfspaces[i];
            h.violation(guess) >= -ACTIVE_SLACK * h.normal.norm()
        })
        .collect();
    if candidates.len() > MAX_ACTIVE_CANDIDATES {
        return None;
    }
    for size in 1..=candidates.len().min(m) {
        let mut subset: Vec<usize> = (0..size).collect();
        loop {
            let active: Vec<&HalfSpace> = subset.iter().map(|&s| &halfspaces[candidates[s]]).collect();
            if let Some(p) = kkt_point(halfspaces, &active, v) {
                return Some(p);
            }
            if !next_combination(&mut subset, candidates.len()) {
                break;
            }
        }
    }
    None
}

/// `v - Aᵀλ` with `A (v - Aᵀλ) = b`, if `λ >= 0` and the point is feasible.
fn kkt_point(all: &[HalfSpace], active: &[&HalfSpace], v: &[f64]) -> Option<Vec<f64>> {
    let m = v.len();
    let a = DMatrix::from_fn(active.len(), m, |r, c| active[r].normal.coords()[c]);
    let rhs = DVector::from_fn(active.len(), |r, _| active[r].violation(v));
    let lambda = (&a * a.transpose()).lu().solve(&rhs)?;
    if lambda.iter().any(|l| !l.is_finite() || *l < 0.0) {
        return None;
    }
    let shift = a.transpose() * lambda;
    let p: Vec<f64> = v.iter().zip(shift.iter()).map(|(vi, si)| vi - si).collect();
    let scale = 1.0 + norm(&p);
    all.iter()
        .all(|h| h.violation(&p) <= 1e-12 * scale * h.normal.norm())
        .then_some(p)
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    for i in (0..k).rev() {
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
