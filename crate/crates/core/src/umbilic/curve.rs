//! Closed curves on the sphere at infinity, stored as spherical polylines.

use crate::error::{Error, Result};
use crate::hyperbolic::{angle_between, IdealPoint};
use crate::math::{self, Mat3, Vec3, PI};
use alloc::format;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::Side;

/// Largest allowed angular gap between consecutive samples.
pub const MAX_SAMPLE_GAP: f64 = PI / 8.0;
pub const MIN_SAMPLES: usize = 16;

/// A simple closed curve on the ideal sphere.
///
/// The complementary disk on the left of the direction of travel (seen from
/// outside the ball) is `D⁺` when `positive_on_left` is set, otherwise `D⁻`.
/// Discrete surfaces spanning the curve are oriented so that their unit
/// normal points toward `D⁺`; with that orientation a minimizer of
/// `Area + 2H·Vol` with `H > 0` is pushed toward `D⁻`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdealCurve {
    samples: Vec<IdealPoint>,
    positive_on_left: bool,
    /// Index of a sample annotated as a C¹ point.
    smooth_index: usize,
}

impl IdealCurve {
    pub fn new(samples: Vec<IdealPoint>, positive_on_left: bool, smooth_index: usize) -> Result<Self> {
        if samples.len() < MIN_SAMPLES {
            return Err(Error::InvalidInput(format!(
                "ideal curve needs at least {MIN_SAMPLES} samples, got {}",
                samples.len()
            )));
        }
        if smooth_index >= samples.len() {
            return Err(Error::InvalidInput("smooth-point index out of range".into()));
        }
        let n = samples.len();
        for i in 0..n {
            let gap = samples[i].angle_to(&samples[(i + 1) % n]);
            if gap > MAX_SAMPLE_GAP {
                return Err(Error::InvalidInput(format!("sample gap {gap:.4} at {i} exceeds π/8")));
            }
            if gap < 1e-12 {
                return Err(Error::InvalidInput(format!("repeated sample at {i}")));
            }
        }
        let c = IdealCurve { samples, positive_on_left, smooth_index };
        if let Some((i, j)) = c.first_self_intersection() {
            return Err(Error::NonSimpleBoundary(format!("segments {i} and {j} intersect")));
        }
        Ok(c)
    }

    /// Round circle of angular radius `psi` about `axis`, traversed counter-clockwise
    /// seen from outside above `axis`; `D⁺` is the cap around `axis`.
    pub fn circle(axis: Vec3, psi: f64, n: usize) -> Result<Self> {
        Self::fourier_circle(axis, psi, &[], n)
    }

    /// Polar-angle perturbation `ψ(t) = ψ₀ + Σ_j c_j cos((j + 2) t)` of a round circle.
    pub fn fourier_circle(axis: Vec3, psi0: f64, coefficients: &[f64], n: usize) -> Result<Self> {
        let frame = Mat3::rotation_between(Vec3::Z, axis.normalized());
        let pts = (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n as f64;
                let psi = psi0
                    + coefficients
                        .iter()
                        .enumerate()
                        .map(|(j, c)| c * math::cos((j + 2) as f64 * t))
                        .sum::<f64>();
                if !(psi > 0.0 && psi < PI) {
                    return Err(Error::InvalidParameter(format!("perturbed polar angle {psi} leaves (0, π)")));
                }
                let v = Vec3::new(math::sin(psi) * math::cos(t), math::sin(psi) * math::sin(t), math::cos(psi));
                IdealPoint::from_direction(frame * v)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(pts, true, 0)
    }

    /// Gnomonic ellipse with angular semi-axes `psi_a`, `psi_b` (both `< π/2`) about `axis`.
    pub fn ellipse(axis: Vec3, psi_a: f64, psi_b: f64, n: usize) -> Result<Self> {
        if !(psi_a > 0.0 && psi_a < PI / 2.0 && psi_b > 0.0 && psi_b < PI / 2.0) {
            return Err(Error::InvalidParameter("ellipse semi-axes must lie in (0, π/2)".into()));
        }
        let frame = Mat3::rotation_between(Vec3::Z, axis.normalized());
        let (ta, tb) = (math::tan(psi_a), math::tan(psi_b));
        let pts = (0..n)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / n as f64;
                IdealPoint::from_direction(frame * Vec3::new(ta * math::cos(t), tb * math::sin(t), 1.0))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(pts, true, 0)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[IdealPoint] {
        &self.samples
    }

    #[inline]
    pub fn point(&self, i: usize) -> Vec3 {
        self.samples[i % self.samples.len()].dir()
    }

    pub fn positive_on_left(&self) -> bool {
        self.positive_on_left
    }

    pub fn smooth_index(&self) -> usize {
        self.smooth_index
    }

    /// Same point set with the traversal reversed; the labelling of `D±` is kept.
    pub fn reversed(&self) -> IdealCurve {
        let mut s = self.samples.clone();
        s.reverse();
        let n = s.len();
        IdealCurve { samples: s, positive_on_left: !self.positive_on_left, smooth_index: n - 1 - self.smooth_index }
    }

    /// Same curve with `D⁺` and `D⁻` exchanged.
    pub fn with_sides_swapped(&self) -> IdealCurve {
        IdealCurve { positive_on_left: !self.positive_on_left, ..self.clone() }
    }

    /// Rigidly rotate the curve.
    pub fn rotated(&self, m: &Mat3) -> IdealCurve {
        let samples = self.samples.iter().map(|p| IdealPoint::from_direction(*m * p.dir()).unwrap()).collect();
        IdealCurve { samples, ..self.clone() }
    }

    /// Samples in the order that puts `D⁺` on the left of travel.
    pub fn positively_ordered(&self) -> IdealCurve {
        if self.positive_on_left {
            self.clone()
        } else {
            self.reversed()
        }
    }

    /// Total spherical length.
    pub fn length(&self) -> f64 {
        let n = self.len();
        (0..n).map(|i| angle_between(self.point(i), self.point(i + 1))).sum()
    }

    /// Unit tangent of the polyline at sample `i` (central difference).
    pub fn tangent(&self, i: usize) -> Vec3 {
        let n = self.len();
        let p = self.point(i);
        let d = self.point(i + 1) - self.point(i + n - 1);
        (d - p * d.dot(p)).normalized()
    }

    /// Unit vector tangent to the sphere, normal to the curve, pointing into `D⁺`.
    pub fn normal_to_positive(&self, i: usize) -> Vec3 {
        let left = self.point(i).cross(self.tangent(i));
        if self.positive_on_left {
            left
        } else {
            -left
        }
    }

    /// Points at `n` uniformly spaced arclength parameters `u_k = (k + phase) / n`.
    pub fn resample(&self, n: usize) -> Vec<Vec3> {
        (0..n).map(|k| self.point_at(k as f64 / n as f64)).collect()
    }

    /// Point at normalised arclength parameter `u ∈ [0, 1)` (slerp within segments).
    pub fn point_at(&self, u: f64) -> Vec3 {
        let total = self.length();
        let mut target = (u - math::floor(u)) * total;
        let n = self.len();
        for i in 0..n {
            let (a, b) = (self.point(i), self.point(i + 1));
            let seg = angle_between(a, b);
            if target <= seg || i == n - 1 {
                return slerp(a, b, (target / seg).clamp(0.0, 1.0));
            }
            target -= seg;
        }
        unreachable!()
    }

    /// Minimum spherical distance from a unit vector to the polyline, and the
    /// normalised arclength parameter of the closest point.
    pub fn closest(&self, c: Vec3) -> (f64, f64) {
        let n = self.len();
        let total = self.length();
        let mut best = (f64::INFINITY, 0.0);
        let mut acc = 0.0;
        for i in 0..n {
            let (a, b) = (self.point(i), self.point(i + 1));
            let seg = angle_between(a, b);
            let (d, frac) = arc_distance(c, a, b);
            if d < best.0 {
                best = (d, (acc + frac * seg) / total);
            }
            acc += seg;
        }
        best
    }

    pub fn distance_to(&self, c: Vec3) -> f64 {
        self.closest(c).0
    }

    /// A point strictly inside `D⁺`, next to the midpoint of segment 0.
    fn positive_reference(&self) -> Vec3 {
        let (a, b) = (self.point(0), self.point(1));
        let m = (a + b).normalized();
        let t = (b - a).normalized();
        let left = m.cross(t);
        let eps = 1e-3 * angle_between(a, b);
        let dir = if self.positive_on_left { left } else { -left };
        (m + dir * eps).normalized()
    }

    /// Which complementary disk contains the unit vector `c` (ray parity test).
    pub fn side_of(&self, c: Vec3) -> Side {
        let q = self.positive_reference();
        let mut target = q;
        // Jitter the reference when the connecting arc is ill defined.
        if (c + q).norm() < 1e-6 {
            target = (q + q.any_orthogonal() * 1e-3).normalized();
        }
        let n = self.len();
        let crossings = (0..n).filter(|&i| arcs_cross(c, target, self.point(i), self.point(i + 1))).count();
        if crossings % 2 == 0 {
            Side::Plus
        } else {
            Side::Minus
        }
    }

    fn first_self_intersection(&self) -> Option<(usize, usize)> {
        let n = self.len();
        for i in 0..n {
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                if arcs_cross(self.point(i), self.point(i + 1), self.point(j), self.point(j + 1)) {
                    return Some((i, j));
                }
            }
        }
        None
    }

    pub fn is_simple(&self) -> bool {
        self.first_self_intersection().is_none()
    }
}

/// Spherical linear interpolation between unit vectors.
pub fn slerp(a: Vec3, b: Vec3, t: f64) -> Vec3 {
    let ang = angle_between(a, b);
    if ang < 1e-12 {
        return a.lerp(b, t).normalized();
    }
    let s = math::sin(ang);
    (a * (math::sin((1.0 - t) * ang) / s) + b * (math::sin(t * ang) / s)).normalized()
}

/// Distance from `c` to the minor great-circle arc `a → b`, with the fraction
/// along the arc of the closest point.
pub fn arc_distance(c: Vec3, a: Vec3, b: Vec3) -> (f64, f64) {
    let nrm = a.cross(b);
    let nn = nrm.norm();
    if nn > 1e-15 {
        let nh = nrm / nn;
        let proj = c - nh * c.dot(nh);
        if proj.norm() > 1e-15 {
            let p = proj.normalized();
            if a.cross(p).dot(nh) >= 0.0 && p.cross(b).dot(nh) >= 0.0 {
                let seg = angle_between(a, b);
                let frac = if seg > 0.0 { angle_between(a, p) / seg } else { 0.0 };
                return (math::asin(c.dot(nh).abs()), frac);
            }
        }
    }
    let (da, db) = (angle_between(c, a), angle_between(c, b));
    if da <= db {
        (da, 0.0)
    } else {
        (db, 1.0)
    }
}

/// Whether the minor arcs `a → b` and `c → d` cross.
pub fn arcs_cross(a: Vec3, b: Vec3, c: Vec3, d: Vec3) -> bool {
    let n1 = a.cross(b);
    let n2 = c.cross(d);
    let l = n1.cross(n2);
    if l.norm() < 1e-14 {
        return false;
    }
    let l = l.normalized();
    let on = |x: Vec3, p: Vec3, q: Vec3, n: Vec3| p.cross(x).dot(n) >= 0.0 && x.cross(q).dot(n) >= 0.0;
    [l, -l].iter().any(|&x| on(x, a, b, n1) && on(x, c, d, n2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_sides_and_distance() {
        let c = IdealCurve::circle(Vec3::Z, PI / 2.0, 64).unwrap();
        assert_eq!(c.side_of(Vec3::Z), Side::Plus);
        assert_eq!(c.side_of(-Vec3::Z), Side::Minus);
        assert_eq!(c.side_of(Vec3::new(0.3, 0.2, 0.5).normalized()), Side::Plus);
        assert_eq!(c.with_sides_swapped().side_of(Vec3::Z), Side::Minus);
        assert_eq!(c.reversed().side_of(Vec3::Z), Side::Plus);
        let d = c.distance_to(Vec3::new(0.0, 0.0, 1.0));
        assert!((d - PI / 2.0).abs() < 1e-12);
        assert!((c.length() - 2.0 * PI).abs() < 0.01);
        // Normal into D⁺ points north on the equator.
        assert!(c.normal_to_positive(0).dot(Vec3::Z) > 0.99);
    }

    #[test]
    fn small_circle_side_when_pole_and_antipode_share_a_side() {
        let axis = Vec3::new(1.0, 0.0, 0.0);
        let c = IdealCurve::circle(axis, 0.3, 32).unwrap();
        assert_eq!(c.side_of(axis), Side::Plus);
        assert_eq!(c.side_of(Vec3::Z), Side::Minus);
        assert_eq!(c.side_of(-Vec3::Z), Side::Minus);
        assert_eq!(c.side_of(-axis), Side::Minus);
    }

    #[test]
    fn rejects_bad_curves() {
        let pts: Vec<_> = (0..8).map(|i| {
            let t = 2.0 * PI * i as f64 / 8.0;
            IdealPoint::from_direction(Vec3::new(math::cos(t), math::sin(t), 0.0)).unwrap()
        }).collect();
        assert!(IdealCurve::new(pts, true, 0).is_err());
        // Figure-eight: equator traversed with a twist.
        let pts: Vec<_> = (0..64).map(|i| {
            let t = 2.0 * PI * i as f64 / 64.0;
            IdealPoint::from_direction(Vec3::new(math::sin(t), math::sin(2.0 * t) * 0.5, 1.0)).unwrap()
        }).collect();
        assert!(matches!(IdealCurve::new(pts, true, 0), Err(Error::NonSimpleBoundary(_))));
    }

    #[test]
    fn fourier_and_ellipse_generators() {
        let c = IdealCurve::fourier_circle(Vec3::Z, 1.2, &[0.08, -0.05, 0.03], 256).unwrap();
        assert_eq!(c.len(), 256);
        assert!(c.is_simple());
        let e = IdealCurve::ellipse(Vec3::Z, 1.0, 0.6, 128).unwrap();
        assert_eq!(e.side_of(Vec3::Z), Side::Plus);
        let p = e.point_at(0.25);
        assert!((p.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closest_parameter_tracks_resampling() {
        let c = IdealCurve::fourier_circle(Vec3::Z, 1.3, &[0.1], 128).unwrap();
        for k in 0..20 {
            let u = k as f64 / 20.0;
            let (d, u2) = c.closest(c.point_at(u));
            assert!(d < 1e-9);
            let du = (u - u2).abs();
            assert!(du.min(1.0 - du) < 1e-9);
        }
    }
}
