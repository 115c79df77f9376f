//! Umbilic H-planes over round ideal circles, shifted halfspaces and sampled
//! shifted convex hulls.
//!
//! Every umbilic surface here is an equidistant surface of a totally geodesic
//! plane. With the Lorentz normal `n` of the plane over a circle `α`, the
//! quantity `asinh <X, n>` is the signed hyperbolic distance to that plane,
//! positive toward `Δ⁺` (the ideal disk around the circle's axis). The H-plane
//! over `α` is the level set at offset `s` with `|tanh s| = |H|`.
//!
//! Orientation table (`σ` is the disk the unit normal points toward, and plays
//! the role of `D⁺` for the circle; the mean curvature vector is `H·ν`):
//!
//! | H sign | σ | offset `s`        | surface displaced toward |
//! |--------|---|-------------------|--------------------------|
//! | `+`    | + | `-artanh H`       | `Δ⁻`                     |
//! | `+`    | − | `+artanh H`       | `Δ⁺`                     |
//! | `−`    | + | `+artanh abs(H)`  | `Δ⁺`                     |
//! | `−`    | − | `-artanh abs(H)`  | `Δ⁻`                     |
//!
//! so `(H, σ)` and `(−H, −σ)` give the same point set with opposite normals.

pub mod curve;

pub use curve::IdealCurve;

use crate::error::{Error, Result};
use crate::hyperbolic::{angle_between, to_hyperboloid, BallPoint, IdealPoint};
use crate::math::{self, Mat3, Vec3, PI};
use alloc::format;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// One of the two complementary disks of a circle (or curve) on the ideal sphere.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        }
    }
    pub fn flip(self) -> Side {
        match self {
            Side::Plus => Side::Minus,
            Side::Minus => Side::Plus,
        }
    }
}

/// Angular-radius guard for round circles.
pub const CIRCLE_EPS: f64 = 1e-6;

/// The circle `{v : angle(v, axis) = ψ}`; `Δ⁺` is the open cap around `axis`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundCircle {
    pub axis: IdealPoint,
    pub angular_radius: f64,
}

impl RoundCircle {
    pub fn new(axis: IdealPoint, angular_radius: f64) -> Result<Self> {
        if !(angular_radius >= CIRCLE_EPS && angular_radius <= PI - CIRCLE_EPS) {
            return Err(Error::InvalidParameter(format!(
                "circle angular radius {angular_radius} outside [1e-6, π - 1e-6]"
            )));
        }
        Ok(RoundCircle { axis, angular_radius })
    }

    pub fn equator() -> Self {
        RoundCircle { axis: IdealPoint::new(Vec3::Z).unwrap(), angular_radius: PI / 2.0 }
    }

    /// Lorentz unit normal `(n₀, n)` of the totally geodesic plane over the circle.
    pub fn lorentz_normal(&self) -> (f64, Vec3) {
        let s = math::sin(self.angular_radius);
        (math::cos(self.angular_radius) / s, self.axis.dir() / s)
    }

    pub fn side_of(&self, v: Vec3) -> Side {
        if angle_between(v, self.axis.dir()) < self.angular_radius {
            Side::Plus
        } else {
            Side::Minus
        }
    }

    /// Rotation taking the canonical frame (`e₃` axis) to this circle's frame.
    fn frame(&self) -> Mat3 {
        Mat3::rotation_between(Vec3::Z, self.axis.dir())
    }

    /// Rapidity of the boost along `e₃` that carries the equator to this circle.
    fn boost(&self) -> f64 {
        math::atanh(math::cos(self.angular_radius))
    }
}

/// Signed hyperbolic distance from `p` to the geodesic plane over `circle`,
/// positive toward `Δ⁺`.
pub fn plane_level(p: Vec3, circle: &RoundCircle) -> f64 {
    let (x0, x) = to_hyperboloid(p);
    let (n0, n) = circle.lorentz_normal();
    math::asinh(-x0 * n0 + x.dot(n))
}

/// Euclidean realisation of an umbilic surface in the ball.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Realization {
    Sphere { center: Vec3, radius: f64 },
    Plane { normal: Vec3, offset: f64 },
}

/// The exact H-plane asymptotic to a round circle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UmbilicCap {
    pub circle: RoundCircle,
    pub h: f64,
    pub sigma: Side,
}

/// Build the umbilic cap over `circle` with mean curvature `h` and orientation `sigma`.
pub fn umbilic_cap(circle: RoundCircle, h: f64, sigma: Side) -> Result<UmbilicCap> {
    if !(h.abs() < 1.0) {
        return Err(Error::InvalidParameter(format!("|H| must be < 1, got {h}")));
    }
    Ok(UmbilicCap { circle, h, sigma })
}

impl UmbilicCap {
    /// Signed offset from the geodesic plane (positive toward `Δ⁺`).
    pub fn offset(&self) -> f64 {
        -self.sigma.sign() * math::atanh(self.h)
    }

    /// Signed distance toward `Δ⁺` measured from the cap surface.
    #[inline]
    pub fn level(&self, p: Vec3) -> f64 {
        plane_level(p, &self.circle) - self.offset()
    }

    /// Unit normal (Euclidean, in the ball) at a point, pointing toward `Δ^σ`.
    pub fn unit_normal(&self, p: Vec3) -> Vec3 {
        let (n0, n) = self.circle.lorentz_normal();
        let s = crate::hyperbolic::one_minus_norm2(p);
        let f = (-n0 * (1.0 + p.norm2()) + 2.0 * p.dot(n)) / s;
        let grad = ((n - p * n0) * 2.0 * s + p * (2.0 * f * s)) / (s * s);
        grad.normalized() * self.sigma.sign()
    }

    /// Angle between the cap and the ideal sphere along the circle, `arccos |H|`.
    pub fn contact_angle(&self) -> f64 {
        math::acos(self.h.abs())
    }

    /// Euclidean sphere or plane containing the cap.
    pub fn realization(&self) -> Realization {
        let (n0, n) = self.circle.lorentz_normal();
        let k = math::sinh(self.offset());
        let a = k - n0;
        if a.abs() < 1e-12 {
            let len = n.norm();
            return Realization::Plane { normal: n / len, offset: 0.5 * (n0 + k) / len };
        }
        let center = -n / a;
        let r2 = (n0 + k) / a + n.norm2() / (a * a);
        Realization::Sphere { center, radius: math::sqrt(r2) }
    }

    /// Cap point over a foot point `(x, y)` of the canonical equatorial plane.
    ///
    /// The foot plane is the unit disk `z = 0`; it is moved by the normal
    /// offset, boosted onto the circle and rotated into place.
    pub fn point_from_foot(&self, x: f64, y: f64) -> Vec3 {
        let (y0, ys) = to_hyperboloid(Vec3::new(x, y, 0.0));
        let s = self.offset();
        let (cs, ss) = (math::cosh(s), math::sinh(s));
        let (x0, x1, x2, x3) = (cs * y0, cs * ys.x, cs * ys.y, ss);
        let b = self.circle.boost();
        let (cb, sb) = (math::cosh(b), math::sinh(b));
        let (z0, z3) = (cb * x0 + sb * x3, sb * x0 + cb * x3);
        let p = Vec3::new(x1, x2, z3) / (1.0 + z0);
        self.circle.frame() * p
    }

    /// Hyperbolic distance from the origin to the cap.
    pub fn distance_from_origin(&self) -> f64 {
        self.level(Vec3::ZERO).abs()
    }
}

/// Hyperbolic distance from `p` to the cap, positive on the side opposite to
/// the unit normal (for `H > 0` the side the mean curvature vector points away from).
pub fn signed_distance_to_cap(p: &BallPoint, cap: &UmbilicCap) -> f64 {
    -cap.sigma.sign() * cap.level(p.coords())
}

/// A closed region bounded by an umbilic cap, asymptotic to `Δ^side`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftedHalfspace {
    pub cap: UmbilicCap,
    pub side: Side,
}

impl ShiftedHalfspace {
    /// Hyperbolic depth by which `p` lies outside the region (0 when inside).
    #[inline]
    pub fn violation(&self, p: Vec3) -> f64 {
        (-self.side.sign() * self.cap.level(p)).max(0.0)
    }

    /// Signed distance into the region (negative outside).
    #[inline]
    pub fn depth(&self, p: Vec3) -> f64 {
        self.side.sign() * self.cap.level(p)
    }
}

pub fn halfspace_contains(p: &BallPoint, hs: &ShiftedHalfspace) -> bool {
    hs.depth(p.coords()) >= -1e-12
}

/// Finite sample of supporting shifted halfspaces of an ideal curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftedHullSampler {
    pub curve: IdealCurve,
    pub h: f64,
    pub halfspaces: Vec<ShiftedHalfspace>,
}

impl ShiftedHullSampler {
    /// Largest violation over all stored halfspaces.
    pub fn violation(&self, p: Vec3) -> f64 {
        self.halfspaces.iter().map(|hs| hs.violation(p)).fold(0.0, f64::max)
    }

    /// Index and magnitude of the most violated halfspace.
    pub fn worst(&self, p: Vec3) -> (usize, f64) {
        self.halfspaces
            .iter()
            .enumerate()
            .map(|(i, hs)| (i, hs.violation(p)))
            .fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a })
    }

    pub fn contains(&self, p: Vec3, tol: f64) -> bool {
        self.halfspaces.iter().all(|hs| hs.depth(p) >= -tol)
    }

    pub fn len(&self) -> usize {
        self.halfspaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.halfspaces.is_empty()
    }
}

pub fn hull_contains(p: &BallPoint, hull: &ShiftedHullSampler, tol: f64) -> bool {
    hull.contains(p.coords(), tol)
}

/// Number of fixed candidate directions scanned for supporting circles.
const CANDIDATE_POOL: usize = 4096;

/// Deterministic Fibonacci sphere.
pub fn fibonacci_sphere(m: usize) -> Vec<Vec3> {
    let golden = PI * (3.0 - math::sqrt(5.0));
    (0..m)
        .map(|i| {
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / m as f64;
            let r = math::sqrt((1.0 - z * z).max(0.0));
            let phi = golden * i as f64;
            Vec3::new(r * math::cos(phi), r * math::sin(phi), z)
        })
        .collect()
}

/// Orientation rule for the cap over a supporting circle whose empty disk lies in
/// the curve's `D^empty_side`: the disk inside `D⁺` plays `D⁺` for the circle.
fn supporting_cap(center: Vec3, radius: f64, empty_side: Side, h: f64) -> Result<ShiftedHalfspace> {
    let circle = RoundCircle::new(IdealPoint::from_direction(center)?, radius)?;
    // Δ⁺ of the circle is the empty disk; the curve sits in Δ⁻.
    Ok(ShiftedHalfspace { cap: umbilic_cap(circle, h, empty_side)?, side: Side::Minus })
}

/// Sample `n` supporting H-shifted halfspaces of `curve`.
///
/// Candidate centres come from a fixed Fibonacci pool, split by the side of the
/// curve they lie on and ordered by farthest-point sampling starting from the
/// deepest point of each side. Around each centre the empty spherical cap is
/// grown until it touches the curve. Sides alternate, so the candidate set for
/// `n₁ < n₂` is a prefix of the set for `n₂`.
pub fn supporting_halfspaces(curve: &IdealCurve, h: f64, n: usize) -> Result<ShiftedHullSampler> {
    if n < 8 {
        return Err(Error::InvalidParameter(format!("need at least 8 supporting halfspaces, got {n}")));
    }
    if !(h.abs() < 1.0) {
        return Err(Error::InvalidParameter(format!("|H| must be < 1, got {h}")));
    }
    let pool = fibonacci_sphere(CANDIDATE_POOL);
    let mut by_side: [Vec<(Vec3, f64)>; 2] = [Vec::new(), Vec::new()];
    for c in pool {
        let d = curve.distance_to(c);
        if d < 10.0 * CIRCLE_EPS {
            continue;
        }
        let idx = match curve.side_of(c) {
            Side::Plus => 0,
            Side::Minus => 1,
        };
        by_side[idx].push((c, d));
    }
    if by_side.iter().any(|v| v.is_empty()) {
        return Err(Error::DegenerateInput("no supporting circle found on one side of the curve".into()));
    }
    let ordered: Vec<Vec<(Vec3, f64)>> = by_side.iter().map(|v| farthest_point_order(v, n)).collect();
    let mut halfspaces = Vec::with_capacity(n);
    while halfspaces.len() < n {
        let side_idx = halfspaces.len() % 2;
        let j = halfspaces.len() / 2;
        match ordered[side_idx].get(j) {
            Some(&(c, d)) => {
                let side = if side_idx == 0 { Side::Plus } else { Side::Minus };
                let radius = (d - 1e-9).min(PI - 2.0 * CIRCLE_EPS);
                halfspaces.push(supporting_cap(c, radius, side, h)?);
            }
            // Side exhausted: keep the alternation deterministic with a duplicate.
            None => halfspaces.push(halfspaces[halfspaces.len() - 2]),
        }
    }
    // Every stored halfspace must be supporting: all samples in Δ⁻ of its circle.
    for hs in &halfspaces {
        let circle = hs.cap.circle;
        if curve.samples().iter().any(|s| circle.side_of(s.dir()) != Side::Minus) {
            return Err(Error::InvariantViolation("constructed halfspace is not supporting".into()));
        }
    }
    Ok(ShiftedHullSampler { curve: curve.clone(), h, halfspaces })
}

/// Farthest-point order (angular metric) of the first `k` points, seeded with the
/// point farthest from the curve.
fn farthest_point_order(pts: &[(Vec3, f64)], k: usize) -> Vec<(Vec3, f64)> {
    let k = k.min(pts.len());
    let mut out = Vec::with_capacity(k);
    let start = pts
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |a, (i, p)| if p.1 > a.1 { (i, p.1) } else { a })
        .0;
    let mut mind: Vec<f64> = pts.iter().map(|_| f64::INFINITY).collect();
    let mut cur = start;
    for _ in 0..k {
        out.push(pts[cur]);
        let c = pts[cur].0;
        let mut best = (0, f64::NEG_INFINITY);
        for (i, p) in pts.iter().enumerate() {
            let d = angle_between(c, p.0);
            if d < mind[i] {
                mind[i] = d;
            }
            if mind[i] > best.1 {
                best = (i, mind[i]);
            }
        }
        cur = best.0;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperbolic::distance_vec;

    fn equator_cap(h: f64, sigma: Side) -> UmbilicCap {
        umbilic_cap(RoundCircle::equator(), h, sigma).unwrap()
    }

    #[test]
    fn flat_equatorial_disk_for_zero_h() {
        let cap = equator_cap(0.0, Side::Plus);
        match cap.realization() {
            Realization::Plane { normal, offset } => {
                assert!((normal - Vec3::Z).norm() < 1e-12);
                assert!(offset.abs() < 1e-12);
            }
            _ => panic!("expected a plane"),
        }
        let o = BallPoint::ORIGIN;
        assert!(signed_distance_to_cap(&o, &cap).abs() < 1e-14);
    }

    #[test]
    fn cap_meets_ideal_sphere_at_arccos_h() {
        for &(psi, h) in &[(PI / 2.0, 0.5), (PI / 3.0, -0.25), (2.0 * PI / 3.0, 0.75), (PI / 6.0, 0.3)] {
            let circle = RoundCircle::new(IdealPoint::new(Vec3::new(0.0, 0.6, 0.8)).unwrap(), psi).unwrap();
            let cap = umbilic_cap(circle, h, Side::Plus).unwrap();
            if let Realization::Sphere { center, radius } = cap.realization() {
                // Angle between the unit sphere and the cap sphere along the circle.
                let cosang = (1.0 + radius * radius - center.norm2()) / (2.0 * radius);
                assert!((cosang.abs() - h.abs()).abs() < 1e-10, "psi {psi} h {h}: {cosang}");
            } else {
                panic!("expected sphere");
            }
            // Foot-parametrised points lie on the realisation and on the level set.
            for &(x, y) in &[(0.0, 0.0), (0.5, 0.2), (-0.3, 0.8)] {
                let p = cap.point_from_foot(x, y);
                assert!(cap.level(p).abs() < 1e-9);
            }
        }
        let cap = equator_cap(0.5, Side::Plus);
        assert!((cap.contact_angle() - PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn orientation_symmetry() {
        let a = equator_cap(0.5, Side::Plus);
        let b = equator_cap(-0.5, Side::Minus);
        assert!((a.offset() - b.offset()).abs() < 1e-15);
        let p = Vec3::new(0.1, 0.2, 0.3);
        assert!((a.unit_normal(p) + b.unit_normal(p)).norm() < 1e-12);
        // H > 0 with σ = + is displaced toward Δ⁻ (south for the equator).
        assert!(a.point_from_foot(0.0, 0.0).z < 0.0);
    }

    #[test]
    fn equidistance_identity() {
        let h = math::tanh(1.0);
        let cap = equator_cap(h, Side::Plus);
        assert!((signed_distance_to_cap(&BallPoint::ORIGIN, &cap).abs() - 1.0).abs() < 1e-12);
        // Dense samples of the cap lie at distance artanh |H| from the plane.
        let plane = RoundCircle::equator();
        for h in [-0.75, -0.25, 0.25, 0.5, 0.75] {
            let cap = equator_cap(h, Side::Plus);
            for i in 0..40 {
                for j in 0..10 {
                    let r = 0.95 * j as f64 / 10.0;
                    let t = i as f64 * 0.157;
                    let p = cap.point_from_foot(r * math::cos(t), r * math::sin(t));
                    assert!((plane_level(p, &plane).abs() - math::atanh(h.abs())).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn halfspace_membership() {
        let plane = equator_cap(0.0, Side::Plus);
        let upper = ShiftedHalfspace { cap: plane, side: Side::Plus };
        let lower = ShiftedHalfspace { cap: plane, side: Side::Minus };
        let o = BallPoint::ORIGIN;
        assert!(halfspace_contains(&o, &upper) && halfspace_contains(&o, &lower));
        let up = BallPoint::new(0.0, 0.0, 0.1).unwrap();
        assert!(halfspace_contains(&up, &upper) && !halfspace_contains(&up, &lower));
        let cap = equator_cap(0.5, Side::Plus);
        let bulge = ShiftedHalfspace { cap, side: Side::Minus };
        let other = ShiftedHalfspace { cap, side: Side::Plus };
        let q = BallPoint::new(0.0, 0.0, -0.5).unwrap();
        assert!(signed_distance_to_cap(&q, &cap) > 0.0);
        assert!(halfspace_contains(&q, &bulge) && !halfspace_contains(&q, &other));
        for k in 0..10 {
            let p = BallPoint::from_vec(cap.point_from_foot(0.08 * k as f64, 0.0)).unwrap();
            assert!(halfspace_contains(&p, &bulge) && halfspace_contains(&p, &other));
        }
    }

    #[test]
    fn foliation_by_equidistant_caps() {
        let hs: Vec<f64> = (-6..=6).map(|k| k as f64 * 0.12).collect();
        for w in hs.windows(2) {
            let a = equator_cap(w[0], Side::Plus);
            let b = equator_cap(w[1], Side::Plus);
            let mut mind = f64::INFINITY;
            for i in 0..30 {
                let t = i as f64 * 0.21;
                for j in 0..8 {
                    let r = 0.9 * j as f64 / 8.0;
                    let p = a.point_from_foot(r * math::cos(t), r * math::sin(t));
                    mind = mind.min(b.level(p).abs());
                }
            }
            assert!(mind > 0.0);
        }
    }

    #[test]
    fn round_circle_hull_contains_its_cap() {
        let curve = IdealCurve::circle(Vec3::Z, PI / 2.0, 64).unwrap();
        for h in [0.0, 0.4, -0.4] {
            let hull = supporting_halfspaces(&curve, h, 16).unwrap();
            assert_eq!(hull.len(), 16);
            let cap = equator_cap(h, Side::Plus);
            for i in 0..20 {
                let t = i as f64 * 0.31;
                for j in 0..6 {
                    let r = 0.9 * j as f64 / 6.0;
                    let p = BallPoint::from_vec(cap.point_from_foot(r * math::cos(t), r * math::sin(t))).unwrap();
                    assert!(hull_contains(&p, &hull, 1e-9), "h {h}: violation {}", hull.violation(p.coords()));
                }
            }
            for hs in &hull.halfspaces {
                // Supporting circles avoid the curve.
                assert!(curve.distance_to(hs.cap.circle.axis.dir()) > hs.cap.circle.angular_radius);
            }
            // A point far on the wrong side of a supporting cap is rejected.
            let hs = hull.halfspaces[0];
            let foot = hs.cap.point_from_foot(0.0, 0.0);
            let lvl = hs.cap.level(foot);
            assert!(lvl.abs() < 1e-9);
            // The equidistant surface two units past the cap, on the empty side.
            let target = hs.cap.offset() + 2.0;
            let outside = BallPoint::from_vec(
                umbilic_cap(hs.cap.circle, math::tanh(target), Side::Minus).unwrap().point_from_foot(0.0, 0.0),
            )
            .unwrap();
            assert!(!hull_contains(&outside, &hull, 1e-3));
            assert!((hull.violation(outside.coords()) - 2.0).abs() < 1e-6);
        }
    }

    #[test]
    fn nested_candidate_sets_shrink_membership() {
        let curve = IdealCurve::fourier_circle(Vec3::Z, 1.3, &[0.1, 0.05], 128).unwrap();
        let small = supporting_halfspaces(&curve, 0.2, 16).unwrap();
        let big = supporting_halfspaces(&curve, 0.2, 64).unwrap();
        assert_eq!(&big.halfspaces[..16], &small.halfspaces[..]);
        let mut rng = crate::math::SplitMix64::new(3);
        for _ in 0..2000 {
            let v = Vec3::new(rng.next_f64() - 0.5, rng.next_f64() - 0.5, rng.next_f64() - 0.5) * 1.9;
            if v.norm() >= 0.98 {
                continue;
            }
            if big.contains(v, 0.0) {
                assert!(small.contains(v, 0.0));
            }
        }
    }

    #[test]
    fn hull_shrinks_with_larger_h_on_matching_side() {
        // For the equator the H-hull is the displaced cap; larger |H| moves it further.
        let c0 = equator_cap(0.2, Side::Plus);
        let c1 = equator_cap(0.6, Side::Plus);
        let p0 = c0.point_from_foot(0.0, 0.0);
        let p1 = c1.point_from_foot(0.0, 0.0);
        assert!((distance_vec(p0, p1) - (math::atanh(0.6) - math::atanh(0.2))).abs() < 1e-9);
    }
}
