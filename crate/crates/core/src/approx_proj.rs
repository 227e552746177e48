//! Approximate projections onto a convex body.
//!
//! For `v` outside `K`, with `P = P_K(v)` and gap `d = |v|_K`:
//!
//! * the cone `C_K(v, θ) = v + {z : <z, P - v> >= |z| d cos θ}` holds every
//!   direction within angle `θ` of the exact projection direction;
//! * the half-space `H⁺_K(v) = {z : <v - P, z> >= <v - P, P>}` is bounded by
//!   the supporting hyperplane `H_K(v)` at `P`.
//!
//! An approximate projection is any point of `C ∩ H⁺`; a supporting one lies
//! on `C ∩ H`. Every approximate projection is a blend
//! `(1 - α) v + α P^sa` of `v` and a supporting approximate projection, and a
//! supporting one has the form `P + d tan φ u` with `φ <= θ` and `u` a unit
//! vector orthogonal to `P - v`. The admissible freedom (how `φ` and `u` are
//! picked) is exposed as a [`SelectionPolicy`].

use std::f64::consts::FRAC_PI_2;

use log::debug;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::convex::{dot, norm, ConvexBody, GeometryError, Point, EPS};

/// How a concrete point is chosen from the approximate projection set.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionPolicy {
    /// Zero angle: the supporting point is the exact projection.
    #[default]
    Exact,
    /// Angle uniform in `[0, θ_k]`, direction uniform on the unit sphere of
    /// the orthogonal complement of the projection direction.
    RandomInCone,
    /// Angle exactly `θ_k`, direction drawn from the node's seeded stream.
    AdversarialFixedAngle,
}

/// Exact projection data of an exterior point.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionFrame {
    /// The exterior point `v`.
    pub origin: Point,
    /// `P_K(v)`.
    pub projection: Point,
    /// `|v|_K > 0`.
    pub gap: f64,
    /// Unit vector along `P_K(v) - v`.
    pub direction: Point,
}

impl ProjectionFrame {
    /// `None` when `v` lies in the body.
    pub fn new(body: &ConvexBody, v: &Point) -> Result<Option<Self>, GeometryError> {
        let projection = body.project(v)?;
        let diff = &projection - v;
        let gap = diff.norm();
        if gap == 0.0 {
            return Ok(None);
        }
        // Normalise by the computed norm so the direction is unit length
        // even when `gap` is at rounding level.
        let direction = &diff * (1.0 / gap);
        Ok(Some(ProjectionFrame { origin: v.clone(), projection, gap, direction }))
    }

    /// `P + gap * tan(angle) * u⊥`, where `u⊥` is the normalised component of
    /// `u` orthogonal to the projection direction.
    pub fn supporting_point(&self, angle: f64, u: &Point) -> Result<Point, GeometryError> {
        check_angle(angle)?;
        if angle == 0.0 {
            return Ok(self.projection.clone());
        }
        let along = u.dot(&self.direction);
        let perp = u.add_scaled(-along, &self.direction);
        let len = perp.norm();
        if !(len > 0.0) {
            return Err(GeometryError::InvalidBody(
                "tangent direction is parallel to the projection direction".into(),
            ));
        }
        Ok(self.projection.add_scaled(self.gap * angle.tan() / len, &perp))
    }

    /// `<z - v, P - v> >= |z - v| |v|_K cos θ`, up to a relative tolerance.
    pub fn cone_contains(&self, z: &Point, theta: f64) -> bool {
        let dz = z - &self.origin;
        let dz_norm = dz.norm();
        let lhs = dz.dot(&self.direction) * self.gap;
        let rhs = dz_norm * self.gap * theta.cos();
        lhs >= rhs - EPS * (1.0 + dz_norm * self.gap)
    }

    /// `<v - P, z - P> >= 0`, up to a relative tolerance.
    pub fn upper_halfspace_contains(&self, z: &Point) -> bool {
        let offset = z - &self.projection;
        // direction points from v to P, so <v - P, z - P> = -gap <direction, z - P>
        let s = -self.gap * offset.dot(&self.direction);
        s >= -EPS * (1.0 + self.gap * offset.norm())
    }

    /// `<v - P, z - P> = 0`, up to a relative tolerance.
    pub fn hyperplane_contains(&self, z: &Point) -> bool {
        let offset = z - &self.projection;
        let s = self.gap * offset.dot(&self.direction);
        s.abs() <= EPS * (1.0 + self.gap * offset.norm())
    }
}

fn check_angle(theta: f64) -> Result<(), GeometryError> {
    if theta.is_finite() && (0.0..FRAC_PI_2).contains(&theta) {
        Ok(())
    } else {
        Err(GeometryError::InvalidAngle(theta))
    }
}

fn check_depth(alpha: f64) -> Result<(), GeometryError> {
    if alpha.is_finite() && (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(GeometryError::InvalidDepth(alpha))
    }
}

fn exterior_frame(body: &ConvexBody, v: &Point) -> Result<ProjectionFrame, GeometryError> {
    ProjectionFrame::new(body, v)?.ok_or(GeometryError::InteriorPoint)
}

/// Membership of `z` in the cone `C_K(v, θ)`. `v` must lie outside `body`.
pub fn in_cone(body: &ConvexBody, v: &Point, z: &Point, theta: f64) -> Result<bool, GeometryError> {
    let frame = exterior_frame(body, v)?;
    check_dim(v, z)?;
    Ok(frame.cone_contains(z, theta))
}

/// Membership of `z` in the outer half-space `H⁺_K(v)`. `v` must lie outside
/// `body`.
pub fn in_upper_halfspace(body: &ConvexBody, v: &Point, z: &Point) -> Result<bool, GeometryError> {
    let frame = exterior_frame(body, v)?;
    check_dim(v, z)?;
    Ok(frame.upper_halfspace_contains(z))
}

/// Membership of `z` in the supporting hyperplane `H_K(v)`.
pub fn on_supporting_hyperplane(body: &ConvexBody, v: &Point, z: &Point) -> Result<bool, GeometryError> {
    let frame = exterior_frame(body, v)?;
    check_dim(v, z)?;
    Ok(frame.hyperplane_contains(z))
}

fn check_dim(v: &Point, z: &Point) -> Result<(), GeometryError> {
    if v.dim() != z.dim() {
        return Err(GeometryError::DimensionMismatch { expected: v.dim(), found: z.dim() });
    }
    Ok(())
}

/// A uniformly distributed unit vector orthogonal to the unit vector `w`.
fn orthogonal_unit<R: Rng + ?Sized>(w: &[f64], rng: &mut R) -> Point {
    let m = w.len();
    loop {
        let mut g: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        let along = dot(&g, w);
        for (gi, wi) in g.iter_mut().zip(w) {
            *gi -= along * wi;
        }
        let len = norm(&g);
        if len > 1e-6 {
            g.iter_mut().for_each(|gi| *gi /= len);
            return Point::new(g);
        }
    }
}

/// A point of `C_K(v, θ) ∩ H_K(v)`, or `v` itself when `v ∈ K`.
pub fn supporting_approx_projection<R: Rng + ?Sized>(
    body: &ConvexBody,
    v: &Point,
    theta: f64,
    policy: SelectionPolicy,
    rng: &mut R,
) -> Result<Point, GeometryError> {
    check_angle(theta)?;
    let Some(frame) = ProjectionFrame::new(body, v)? else {
        return Ok(v.clone());
    };
    let angle = match policy {
        SelectionPolicy::Exact => 0.0,
        SelectionPolicy::RandomInCone => theta * rng.random::<f64>(),
        SelectionPolicy::AdversarialFixedAngle => theta,
    };
    if angle == 0.0 {
        return Ok(frame.projection);
    }
    if v.dim() == 1 {
        debug!("dimension 1: supporting approximate projection set is {{P_K(v)}}");
        return Ok(frame.projection);
    }
    let u = orthogonal_unit(frame.direction.coords(), rng);
    Ok(frame.projection.add_scaled(frame.gap * angle.tan(), &u))
}

/// The supporting point and the blended approximate projection together.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxProjection {
    /// `P^sa ∈ C_K(v, θ) ∩ H_K(v)`.
    pub supporting: Point,
    /// `P^a = (1 - α) v + α P^sa`.
    pub point: Point,
}

pub fn approx_projection_parts<R: Rng + ?Sized>(
    body: &ConvexBody,
    v: &Point,
    theta: f64,
    alpha: f64,
    policy: SelectionPolicy,
    rng: &mut R,
) -> Result<ApproxProjection, GeometryError> {
    check_depth(alpha)?;
    let supporting = supporting_approx_projection(body, v, theta, policy, rng)?;
    let point = if alpha == 1.0 {
        supporting.clone()
    } else if alpha == 0.0 {
        v.clone()
    } else {
        v.lerp(&supporting, alpha)
    };
    Ok(ApproxProjection { supporting, point })
}

/// `P^a = (1 - α) v + α P^sa` with `P^sa` from [`supporting_approx_projection`].
pub fn approx_projection<R: Rng + ?Sized>(
    body: &ConvexBody,
    v: &Point,
    theta: f64,
    alpha: f64,
    policy: SelectionPolicy,
    rng: &mut R,
) -> Result<Point, GeometryError> {
    Ok(approx_projection_parts(body, v, theta, alpha, policy, rng)?.point)
}

/// Recovers `(α, P^sa)` from an approximate projection `pa ≠ v`.
///
/// Returns `None` when `v` lies in the body or `pa == v`, where the blend is
/// not unique.
pub fn blend_components(body: &ConvexBody, v: &Point, pa: &Point) -> Result<Option<(f64, Point)>, GeometryError> {
    check_dim(v, pa)?;
    let Some(frame) = ProjectionFrame::new(body, v)? else {
        return Ok(None);
    };
    let step = pa - v;
    if step.norm() == 0.0 {
        return Ok(None);
    }
    // <P^sa - v, direction> = gap on the supporting hyperplane
    let alpha = step.dot(&frame.direction) / frame.gap;
    if !(alpha > 0.0) {
        return Ok(None);
    }
    Ok(Some((alpha, v.add_scaled(1.0 / alpha, &step))))
}
