//! Exact geometry of the Poincaré ball model of hyperbolic 3-space.
//!
//! The model origin `O` is the centre of every geodesic ball used in this crate.
//! Besides ball coordinates we use the hyperboloid (Lorentz) model internally:
//! a ball point `p` corresponds to `X = ((1+|p|²), 2p) / (1-|p|²)` with the
//! bilinear form `<X, Y> = -X₀Y₀ + x·y`.
//!
//! Upper half-space convention: the Cayley-type map sends the ideal point
//! `(0,0,1)` to the point at infinity and `O` to `(0,0,1)`:
//!
//! ```text
//! w = |p - e₃|²,   (u, v, t) = (2x / w, 2y / w, (1 - |p|²) / w)
//! ```

use crate::error::{Error, Result};
use crate::math::{self, Vec3};
use alloc::format;
use serde::{Deserialize, Serialize};

/// Default guard band against points numerically on the sphere at infinity.
pub const EPS_IDEAL: f64 = 1e-12;

/// A point of the open unit ball.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallPoint(Vec3);

impl BallPoint {
    pub const ORIGIN: BallPoint = BallPoint(Vec3::ZERO);

    pub fn new(x: f64, y: f64, z: f64) -> Result<Self> {
        Self::from_vec(Vec3::new(x, y, z))
    }

    pub fn from_vec(p: Vec3) -> Result<Self> {
        Self::with_guard(p, EPS_IDEAL)
    }

    /// Construct with a custom guard `eps`: norms `>= 1 - eps` are rejected.
    pub fn with_guard(p: Vec3, eps: f64) -> Result<Self> {
        let n = p.norm();
        if !p.is_finite() || n >= 1.0 - eps {
            return Err(Error::InvalidParameter(format!(
                "ball point {:?} has norm {n} >= 1 - {eps}",
                p.to_array()
            )));
        }
        Ok(BallPoint(p))
    }

    /// Caller guarantees `|p| < 1`; used on hot paths that already enforce it.
    #[inline]
    pub(crate) fn new_unchecked(p: Vec3) -> Self {
        debug_assert!(p.norm() < 1.0, "point outside ball: {p:?}");
        BallPoint(p)
    }

    #[inline]
    pub fn coords(&self) -> Vec3 {
        self.0
    }
    #[inline]
    pub fn norm(&self) -> f64 {
        self.0.norm()
    }
    #[inline]
    pub fn x(&self) -> f64 {
        self.0.x
    }
    #[inline]
    pub fn y(&self) -> f64 {
        self.0.y
    }
    #[inline]
    pub fn z(&self) -> f64 {
        self.0.z
    }
}

/// A unit vector on the sphere at infinity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdealPoint(Vec3);

impl IdealPoint {
    pub fn new(v: Vec3) -> Result<Self> {
        if !v.is_finite() || (v.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "ideal point {:?} is not a unit vector",
                v.to_array()
            )));
        }
        Ok(IdealPoint(v))
    }

    /// Normalise a nonzero direction onto the sphere.
    pub fn from_direction(v: Vec3) -> Result<Self> {
        let n = v.norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidParameter("zero direction for ideal point".into()));
        }
        Ok(IdealPoint(v / n))
    }

    #[inline]
    pub fn dir(&self) -> Vec3 {
        self.0
    }

    /// Spherical (angular) distance to another ideal point.
    pub fn angle_to(&self, o: &IdealPoint) -> f64 {
        angle_between(self.0, o.0)
    }
}

/// Numerically stable angle between two unit vectors.
pub fn angle_between(a: Vec3, b: Vec3) -> f64 {
    math::atan2(a.cross(b).norm(), a.dot(b))
}

/// Closed geodesic ball centred at the model origin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeodesicBall {
    pub center: BallPoint,
    pub radius: f64,
    pub euclidean_radius: f64,
}

impl GeodesicBall {
    /// Nominal mean curvature of the boundary sphere toward the interior.
    pub fn boundary_mean_curvature(&self) -> f64 {
        math::coth(self.radius)
    }

    pub fn contains(&self, p: &BallPoint, slack: f64) -> bool {
        p.norm() <= self.euclidean_radius + slack
    }

    /// Hyperbolic area of the boundary sphere, `4π sinh² r`.
    pub fn boundary_area(&self) -> f64 {
        let s = math::sinh(self.radius);
        4.0 * math::PI * s * s
    }
}

/// Point of the upper half-space model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UHPoint {
    pub u: f64,
    pub v: f64,
    pub t: f64,
}

impl UHPoint {
    pub fn new(u: f64, v: f64, t: f64) -> Result<Self> {
        if !(t > 0.0) || !u.is_finite() || !v.is_finite() || !t.is_finite() {
            return Err(Error::InvalidParameter(format!("upper half-space point with height {t}")));
        }
        Ok(UHPoint { u, v, t })
    }
}

/// `1 - |p|²` computed without cancellation near the sphere.
#[inline]
pub fn one_minus_norm2(p: Vec3) -> f64 {
    let n = p.norm();
    (1.0 - n) * (1.0 + n)
}

/// Conformal scale factor `λ(p) = 2 / (1 - |p|²)`.
#[inline]
pub fn conformal_factor(p: &BallPoint) -> f64 {
    2.0 / one_minus_norm2(p.0)
}

/// Hyperbolic distance between two ball points.
pub fn distance(p: &BallPoint, q: &BallPoint) -> f64 {
    distance_vec(p.0, q.0)
}

#[inline]
pub(crate) fn distance_vec(p: Vec3, q: Vec3) -> f64 {
    let denom = math::sqrt(one_minus_norm2(p) * one_minus_norm2(q));
    2.0 * math::asinh((p - q).norm() / denom)
}

/// Hyperbolic distance from the origin to a point at Euclidean radius `rho`.
#[inline]
pub fn radius_from_euclidean(rho: f64) -> f64 {
    2.0 * math::atanh(rho)
}

#[inline]
pub fn euclidean_from_radius(r: f64) -> f64 {
    math::tanh(0.5 * r)
}

/// Geodesic ball of hyperbolic radius `r` about the origin.
pub fn geodesic_ball(r: f64) -> Result<GeodesicBall> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::InvalidParameter(format!("geodesic ball radius must be > 0, got {r}")));
    }
    let rho = euclidean_from_radius(r);
    if rho >= 1.0 - EPS_IDEAL {
        return Err(Error::InvalidParameter(format!("geodesic ball radius {r} reaches the ideal sphere numerically")));
    }
    Ok(GeodesicBall { center: BallPoint::ORIGIN, radius: r, euclidean_radius: rho })
}

/// Image of `p` in the upper half-space model.
pub fn to_upper_half_space(p: &BallPoint) -> UHPoint {
    let q = p.0;
    let w = (q - Vec3::Z).norm2();
    UHPoint { u: 2.0 * q.x / w, v: 2.0 * q.y / w, t: one_minus_norm2(q) / w }
}

/// Inverse of [`to_upper_half_space`].
pub fn from_upper_half_space(h: &UHPoint) -> Result<BallPoint> {
    // Same inversion in the sphere of radius √2 about e₃ after flipping the height.
    let q = Vec3::new(h.u, h.v, -h.t);
    let d = q - Vec3::Z;
    let p = Vec3::Z + d * (2.0 / d.norm2());
    BallPoint::from_vec(p)
}

/// Hyperbolic distance in the upper half-space model.
pub fn uhs_distance(a: &UHPoint, b: &UHPoint) -> f64 {
    let du = a.u - b.u;
    let dv = a.v - b.v;
    let dt = a.t - b.t;
    let e2 = du * du + dv * dv + dt * dt;
    2.0 * math::asinh(0.5 * math::sqrt(e2 / (a.t * b.t)))
}

/// Hyperboloid coordinates `(X₀, x)` of a ball point.
#[inline]
pub(crate) fn to_hyperboloid(p: Vec3) -> (f64, Vec3) {
    let s = one_minus_norm2(p);
    ((1.0 + p.norm2()) / s, p * (2.0 / s))
}

/// Ball point of hyperboloid coordinates; `x0` is recomputed from `x` for stability.
#[inline]
pub(crate) fn from_hyperboloid(x: Vec3) -> Vec3 {
    let x0 = math::sqrt(1.0 + x.norm2());
    x / (1.0 + x0)
}

/// Lorentz boost along the z axis by rapidity `beta`, applied to a ball point.
/// It moves the origin to `(0, 0, tanh(beta/2))` and fixes the ideal points `±e₃`.
pub fn boost_z(p: Vec3, beta: f64) -> Vec3 {
    let (x0, x) = to_hyperboloid(p);
    let (ch, sh) = (math::cosh(beta), math::sinh(beta));
    let z = sh * x0 + ch * x.z;
    from_hyperboloid(Vec3::new(x.x, x.y, z))
}

/// Point at fraction `t` of the geodesic segment from `p` to `q`.
pub fn geodesic_lerp(p: Vec3, q: Vec3, t: f64) -> Vec3 {
    let (p0, ps) = to_hyperboloid(p);
    let (q0, qs) = to_hyperboloid(q);
    let d = math::acosh(p0 * q0 - ps.dot(qs));
    if d < 1e-9 {
        return p.lerp(q, t);
    }
    let (a, b) = (math::sinh((1.0 - t) * d) / math::sinh(d), math::sinh(t * d) / math::sinh(d));
    from_hyperboloid(ps * a + qs * b)
}
