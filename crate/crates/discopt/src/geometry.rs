//! Fixed unit-square domain and the movable disc inclusion.
//!
//! The domain is `Ω = (0,1)²` with a Dirichlet side `Γ0 = (0,1)×{0}`
//! (the heated bottom) and insulated remainder `Γn = ∂Ω \ Γ0`. The design
//! variable is a disc of fixed radius whose closure must stay strictly
//! inside the square by a configurable margin.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::{Error, Result};

/// Plane vector / point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    /// Counterclockwise perpendicular `(−y, x)`.
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    /// z-component of the cross product `self × other`.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// Tolerance for the "point lies on the circle" precondition.
pub const ON_CIRCLE_TOL: f64 = 1e-9;

/// The design variable: disc center and fixed radius, in units of the square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscGeometry {
    pub center: Vec2,
    pub radius: f64,
}

/// Boundary partition of the unit square plus the interiority margin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainSpec {
    /// Required clearance between the disc and `∂Ω`.
    pub margin: f64,
}

impl Default for DomainSpec {
    fn default() -> Self {
        // One coarse mesh cell; keeps the gap between circle and wall meshable.
        DomainSpec { margin: 0.02 }
    }
}

/// Boundary side classification for the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryTag {
    /// Heated bottom side `y = 0` (Dirichlet).
    Gamma0,
    /// Insulated remainder of `∂Ω` (homogeneous Neumann).
    GammaN,
}

/// Tangent/normal pair on the disc boundary. `normal` is the outward normal
/// of the surrounding matrix region, i.e. it points toward the disc center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub tangent: Vec2,
    pub normal: Vec2,
}

impl DiscGeometry {
    pub fn new(center: Vec2, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::InfeasibleGeometry(format!(
                "radius must be positive, got {radius}"
            )));
        }
        Ok(DiscGeometry { center, radius })
    }

    /// True if the disc enlarged by `margin` stays inside `[0,1]²`, i.e. the
    /// center lies in the closed box `[r+margin, 1−r−margin]²`. With a
    /// positive margin the disc itself is strictly interior.
    pub fn is_interior(&self, margin: f64) -> bool {
        let reach = self.radius + margin;
        let c = self.center;
        c.x - reach >= 0.0 && c.x + reach <= 1.0 && c.y - reach >= 0.0 && c.y + reach <= 1.0
    }

    pub fn validate_interior(&self, margin: f64) -> Result<()> {
        if self.is_interior(margin) {
            Ok(())
        } else {
            Err(Error::InfeasibleGeometry(format!(
                "disc center ({}, {}) radius {} margin {} is not strictly interior to the unit square",
                self.center.x, self.center.y, self.radius, margin
            )))
        }
    }

    /// Analytic tangent/normal frame of the circle at `x`.
    ///
    /// `tangent = (x − c)⊥ / r` with the perpendicular taken clockwise
    /// (`(d.y, −d.x)`), `normal = −(x − c)/r`. Requires `x` on the circle
    /// within [`ON_CIRCLE_TOL`].
    pub fn interface_frame(&self, x: Vec2) -> Result<Frame> {
        let d = x - self.center;
        let dist = d.norm();
        if (dist - self.radius).abs() > ON_CIRCLE_TOL {
            return Err(Error::ContractViolation(format!(
                "point ({}, {}) is not on the circle: |x - c| = {dist}, r = {}",
                x.x, x.y, self.radius
            )));
        }
        let inv_r = 1.0 / self.radius;
        Ok(Frame {
            tangent: Vec2::new(d.y, -d.x) * inv_r,
            normal: -d * inv_r,
        })
    }
}

/// Componentwise clamp of a candidate center to the feasible box
/// `[r+margin, 1−r−margin]²`, the closest feasible point.
///
/// Fails when `radius + margin >= 0.5`: no center keeps such a disc inside
/// the unit square.
pub fn project_center(candidate: Vec2, radius: f64, margin: f64) -> Result<Vec2> {
    let reach = radius + margin;
    if reach >= 0.5 {
        return Err(Error::InfeasibleGeometry(format!(
            "radius {radius} + margin {margin} >= 0.5: no feasible center exists"
        )));
    }
    let lo = reach;
    let hi = 1.0 - reach;
    Ok(Vec2::new(
        candidate.x.clamp(lo, hi),
        candidate.y.clamp(lo, hi),
    ))
}

/// Classify a boundary point of the unit square.
pub fn boundary_tag(p: Vec2) -> BoundaryTag {
    if p.y == 0.0 {
        BoundaryTag::Gamma0
    } else {
        BoundaryTag::GammaN
    }
}
