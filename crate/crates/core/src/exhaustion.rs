//! Exhaustion of H³ by geodesic balls: boundary curves on ball spheres that
//! converge to an ideal curve, the disks they bound, convergence diagnostics on
//! a fixed core, and the least-area-annulus barrier used to keep nonseparating
//! disks away from the centre.

use crate::error::{Error, Result};
use crate::hyperbolic::{distance_vec, euclidean_from_radius, geodesic_ball, geodesic_lerp, GeodesicBall, IdealPoint};
use crate::math::{self, Vec3, PI};
use crate::mesh::{annulus_between, attach_annulus, point_mesh_distance, TriMesh};
use crate::solver::{minimize_annulus, minimize_disk, polyline_at, polyline_is_simple, SolveReport, SolverConfig};
use crate::umbilic::curve::arc_distance;
use crate::umbilic::{supporting_halfspaces, IdealCurve, RoundCircle, ShiftedHullSampler, Side};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// Largest angular excursion from the radial projection searched for the band.
const BAND_SEARCH: f64 = 0.6;
/// Where the radial projection leaves the band, `γ_r` is moved to the nearest
/// band edge and then this far inside (angle, capped at a tenth of the width).
const BAND_INSET: f64 = 1e-4;

/// Unit point on `Γ` at parameter `u` and the unit tangent-plane normal toward `D⁺`.
fn frame(curve: &IdealCurve, u: f64) -> (Vec3, Vec3) {
    let c = curve.point_at(u);
    let d = 1e-4;
    let t = curve.point_at(u + d) - curve.point_at(u - d);
    let left = c.cross(t).normalized();
    (c, if curve.positive_on_left() { left } else { -left })
}

fn on_circle(c: Vec3, n: Vec3, t: f64) -> Vec3 {
    c * math::cos(t) + n * math::sin(t)
}

/// The annulus `∂B_r ∩ CH_H(Γ)` in coordinates `(u, v)`: `u` is the arclength
/// parameter of `Γ` and `v` the angle along the great circle through `Γ(u)`
/// normal to `Γ`, positive toward `D⁺`. The band at `u` is `lower ≤ v ≤ upper`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnulusBand {
    pub radius: f64,
    pub curve: IdealCurve,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl AnnulusBand {
    fn samples(&self) -> usize {
        self.lower.len()
    }

    fn interp(values: &[f64], u: f64) -> f64 {
        let n = values.len() as f64;
        let x = (u - math::floor(u)) * n;
        let i = math::floor(x) as usize % values.len();
        let t = x - math::floor(x);
        values[i] * (1.0 - t) + values[(i + 1) % values.len()] * t
    }

    /// Band limits at parameter `u`.
    pub fn limits(&self, u: f64) -> (f64, f64) {
        (Self::interp(&self.lower, u), Self::interp(&self.upper, u))
    }

    /// Point of `∂B_r` with band coordinates `(u, v)`.
    pub fn point(&self, u: f64, v: f64) -> Vec3 {
        let (c, n) = frame(&self.curve, u);
        on_circle(c, n, v) * euclidean_from_radius(self.radius)
    }

    /// Band coordinates `(u, v)` of a point (only its direction is used).
    pub fn coordinates(&self, p: Vec3) -> (f64, f64) {
        let d = p.normalized();
        let (_, u) = self.curve.closest(d);
        let (c, n) = frame(&self.curve, u);
        (u, math::atan2(d.dot(n), d.dot(c)))
    }

    /// Whether `p` lies on `∂B_r` (relative tolerance 1e-9) inside the band,
    /// with angular slack `tol`.
    pub fn contains(&self, p: Vec3, tol: f64) -> bool {
        let e = euclidean_from_radius(self.radius);
        if (p.norm() - e).abs() > 1e-9 * e.max(1e-3) + 1e-12 {
            return false;
        }
        let (u, v) = self.coordinates(p);
        let (lo, hi) = self.limits(u);
        v >= lo - tol && v <= hi + tol
    }

    /// Bounding curve `α_r^±` of the band, one point per band sample.
    pub fn edge(&self, side: Side) -> Vec<Vec3> {
        let n = self.samples();
        (0..n)
            .map(|k| {
                let u = k as f64 / n as f64;
                let v = match side {
                    Side::Plus => self.upper[k],
                    Side::Minus => self.lower[k],
                };
                self.point(u, v)
            })
            .collect()
    }

    /// Number of times a closed loop winds around the band.
    pub fn winding(&self, points: &[Vec3]) -> i64 {
        let us: Vec<f64> = points.iter().map(|&p| self.coordinates(p).0).collect();
        let mut total = 0.0;
        for i in 0..us.len() {
            let mut du = us[(i + 1) % us.len()] - us[i];
            du -= math::round(du);
            total += du;
        }
        math::round(total) as i64
    }
}

/// Admissible angle nearest to 0 in `[-BAND_SEARCH, BAND_SEARCH]`: a grid scan,
/// then golden-section refinement around the grid's local minima (the band can
/// be much thinner than the grid step). Returns the least violation on failure.
fn admissible_angle(f: &impl Fn(f64) -> f64) -> core::result::Result<f64, f64> {
    if f(0.0) <= 0.0 {
        return Ok(0.0);
    }
    let steps = 240;
    let dt = BAND_SEARCH / steps as f64;
    let ts: Vec<f64> = (-(steps as i64)..=steps as i64).map(|j| j as f64 * dt).collect();
    let fs: Vec<f64> = ts.iter().map(|&t| f(t)).collect();
    let mut order: Vec<usize> = (0..ts.len()).collect();
    order.sort_by(|&a, &b| ts[a].abs().total_cmp(&ts[b].abs()));
    if let Some(&i) = order.iter().find(|&&i| fs[i] <= 0.0) {
        return Ok(ts[i]);
    }
    let mut minima: Vec<usize> =
        (1..ts.len() - 1).filter(|&i| fs[i] <= fs[i - 1] && fs[i] <= fs[i + 1]).collect();
    minima.sort_by(|&a, &b| fs[a].total_cmp(&fs[b]));
    let mut least = fs.iter().copied().fold(f64::INFINITY, f64::min);
    for &i in minima.iter().take(4) {
        let (t, v) = math::golden_min(f, ts[i] - dt, ts[i] + dt, 60);
        if v <= 0.0 {
            return Ok(t);
        }
        least = least.min(v);
    }
    Err(least)
}

/// Ideal point moved by the boost along `e₃` with rapidity `beta` (the isometry
/// taking the origin to `tanh(beta/2)·e₃`).
fn boost_ideal_z(u: Vec3, beta: f64) -> Vec3 {
    let (ch, sh) = (math::cosh(beta), math::sinh(beta));
    Vec3::new(u.x, u.y, sh + ch * u.z) / (ch + sh * u.z)
}

/// Move `Γ` by a boost along its axis so that the origin sits midway through the
/// sampled `CH_H(Γ)` on that axis. Returns the moved curve and the rapidity used
/// (zero when the axis chord is already centred).
pub fn center_on_hull(curve: &IdealCurve, h: f64, hull_samples: usize) -> Result<(IdealCurve, f64)> {
    let hull = supporting_halfspaces(curve, h, hull_samples)?;
    let axis = curve_axis(curve);
    let inside = |s: f64| hull.violation(axis * math::tanh(0.5 * s)) <= 0.0;
    let grid: Vec<f64> = (-600..=600).map(|j| j as f64 * 0.01).filter(|&s| inside(s)).collect();
    let (Some(&lo), Some(&hi)) = (grid.first(), grid.last()) else {
        return Err(Error::DegenerateInput("the sampled hull misses the curve axis".into()));
    };
    let mid = 0.5 * (lo + hi);
    if mid.abs() < 1e-12 {
        return Ok((curve.clone(), 0.0));
    }
    let to_z = math::Mat3::rotation_between(axis, Vec3::Z);
    let back = to_z.transpose();
    let samples = curve
        .samples()
        .iter()
        .map(|p| IdealPoint::from_direction(back * boost_ideal_z(to_z * p.dir(), -mid)))
        .collect::<Result<Vec<_>>>()?;
    Ok((IdealCurve::new(samples, curve.positive_on_left(), curve.smooth_index())?, -mid))
}

/// Unit vector along `Σ p_i × p_{i+1}`: the pole of a curve's best-fit great circle.
fn curve_axis(curve: &IdealCurve) -> Vec3 {
    (0..curve.len()).fold(Vec3::ZERO, |s, i| s + curve.point(i).cross(curve.point(i + 1))).normalized()
}

/// Sample the band `∂B_r ∩ CH_H(Γ)` at `samples` uniformly spaced parameters.
pub fn band(curve: &IdealCurve, hull: &ShiftedHullSampler, r: f64, samples: usize) -> Result<AnnulusBand> {
    if !(r > 0.0) || samples < 8 {
        return Err(Error::InvalidParameter(format!("band needs r > 0 and ≥ 8 samples (r = {r}, n = {samples})")));
    }
    let curve = curve.positively_ordered();
    let e = euclidean_from_radius(r);
    let mut lower = Vec::with_capacity(samples);
    let mut upper = Vec::with_capacity(samples);
    for k in 0..samples {
        let (c, n) = frame(&curve, k as f64 / samples as f64);
        let f = |t: f64| hull.violation(on_circle(c, n, t) * e);
        let start = match admissible_angle(&f) {
            Ok(t) => t,
            Err(least) => return Err(Error::RadiusTooSmall { radius: r, violation: least }),
        };
        let edge = |dir: f64| -> f64 {
            let (mut inside, mut step) = (start, 1e-3);
            let mut outside = None;
            while (inside - start).abs() < PI / 2.0 {
                let t = inside + dir * step;
                if f(t) > 0.0 {
                    outside = Some(t);
                    break;
                }
                inside = t;
                step *= 2.0;
            }
            let Some(mut out) = outside else {
                return inside;
            };
            for _ in 0..50 {
                let mid = 0.5 * (inside + out);
                if f(mid) <= 0.0 {
                    inside = mid;
                } else {
                    out = mid;
                }
            }
            inside
        };
        lower.push(edge(-1.0));
        upper.push(edge(1.0));
    }
    Ok(AnnulusBand { radius: r, curve, lower, upper })
}

/// `γ_r`: the radial projection of `Γ` onto `∂B_r` at `n` uniformly spaced
/// parameters; where the projection leaves the band it is pushed along the
/// normal great circle to just inside it. Oriented with `D⁺` on the left.
pub fn boundary_curve(band: &AnnulusBand, n: usize) -> Result<Vec<Vec3>> {
    if n < 8 {
        return Err(Error::InvalidParameter(format!("boundary curve needs ≥ 8 points, got {n}")));
    }
    let gamma: Vec<Vec3> = (0..n)
        .map(|k| {
            let u = k as f64 / n as f64;
            let (lo, hi) = band.limits(u);
            let w = hi - lo;
            let inset = BAND_INSET.min(0.1 * w);
            let v = if lo <= 0.0 && 0.0 <= hi { 0.0 } else { 0.0f64.clamp(lo + inset, hi - inset) };
            band.point(u, v)
        })
        .collect();
    if !polyline_is_simple(&gamma) {
        return Err(Error::NonSimpleBoundary(format!("boundary curve at r = {} self-intersects", band.radius)));
    }
    if band.winding(&gamma) != 1 {
        return Err(Error::InvariantViolation("boundary curve is not essential in the band".into()));
    }
    Ok(gamma)
}

/// Spherical Hausdorff distance between the radial projection of a polyline
/// and the ideal curve.
pub fn ideal_gap(gamma: &[Vec3], curve: &IdealCurve) -> f64 {
    let dirs: Vec<Vec3> = gamma.iter().map(|p| p.normalized()).collect();
    let forward = dirs.iter().map(|&d| curve.distance_to(d)).fold(0.0, f64::max);
    let m = dirs.len();
    let backward = curve
        .resample(4 * curve.len().max(m))
        .into_iter()
        .map(|c| (0..m).map(|i| arc_distance(c, dirs[i], dirs[(i + 1) % m]).0).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    forward.max(backward)
}

/// Whether a closed boundary loop on `∂B_r` is null-homotopic in the band
/// (winding number 0). Errors when the loop leaves the band.
pub fn nonseparating_check(boundary: &[Vec3], band: &AnnulusBand) -> Result<bool> {
    if let Some(p) = boundary.iter().find(|&&p| !band.contains(p, 1e-9)) {
        return Err(Error::InvalidInput(format!("boundary point {p:?} is not in the band")));
    }
    Ok(band.winding(boundary) == 0)
}

/// Closed loop bounding the band rectangle `[u₀ − δ, u₀ + δ] × [v⁻, v⁺]`, with
/// `v^±` a fraction `fill` of the local band width around its centre line.
pub fn band_loop(band: &AnnulusBand, u0: f64, delta: f64, fill: f64, n_side: usize) -> Vec<Vec3> {
    let v_at = |u: f64, s: f64| {
        let (lo, hi) = band.limits(u);
        0.5 * (lo + hi) + s * 0.5 * fill * (hi - lo)
    };
    let m = n_side.max(2);
    let mut pts = Vec::with_capacity(4 * m);
    for i in 0..m {
        let u = u0 - delta + 2.0 * delta * i as f64 / m as f64;
        pts.push(band.point(u, v_at(u, -1.0)));
    }
    for i in 0..m {
        let s = -1.0 + 2.0 * i as f64 / m as f64;
        pts.push(band.point(u0 + delta, v_at(u0 + delta, s)));
    }
    for i in 0..m {
        let u = u0 + delta - 2.0 * delta * i as f64 / m as f64;
        pts.push(band.point(u, v_at(u, 1.0)));
    }
    for i in 0..m {
        let s = 1.0 - 2.0 * i as f64 / m as f64;
        pts.push(band.point(u0 - delta, v_at(u0 - delta, s)));
    }
    pts
}

/// Settings of an exhaustion run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExhaustionConfig {
    /// Increasing ball radii `r₁ < … < r_m`.
    pub radii: Vec<f64>,
    /// Core radius `K < r₁` on which stages are compared.
    pub core_radius: f64,
    pub hull_samples: usize,
    /// Boundary points per stage: `clamp(length(γ_r) / boundary_spacing, 32, max_boundary_points)`.
    pub boundary_spacing: f64,
    pub max_boundary_points: usize,
    /// Solver settings; the ball is replaced per stage.
    pub solver: SolverConfig,
}

impl ExhaustionConfig {
    pub fn new(h: f64) -> Result<Self> {
        Ok(ExhaustionConfig {
            radii: vec![2.0, 3.0, 4.0, 5.0, 6.0],
            core_radius: 1.5,
            hull_samples: 64,
            boundary_spacing: 0.2,
            max_boundary_points: 192,
            solver: SolverConfig::new(h, 2.0)?,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.radii.is_empty() || self.radii.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter("radius schedule must be non-empty and increasing".into()));
        }
        if !(self.core_radius > 0.0 && self.core_radius < self.radii[0]) {
            return Err(Error::InvalidParameter(format!("core radius {} must lie in (0, r₁)", self.core_radius)));
        }
        if !(self.boundary_spacing > 0.0) || self.max_boundary_points < 32 {
            return Err(Error::InvalidParameter("boundary spacing must be positive and max points ≥ 32".into()));
        }
        self.solver.validate()
    }

    fn boundary_points(&self, r: f64) -> usize {
        let len = 2.0 * PI * math::sinh(r);
        (math::ceil(len / self.boundary_spacing) as usize).clamp(32, self.max_boundary_points)
    }
}

/// One ball of the exhaustion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExhaustionStage {
    pub n: usize,
    pub ball: GeodesicBall,
    pub gamma: Vec<Vec3>,
    pub band: AnnulusBand,
    pub ideal_gap: f64,
    pub disk: Option<TriMesh>,
    pub report: Option<SolveReport>,
    /// Hausdorff distance between this and the previous disk on the core.
    pub hausdorff_to_prev_on_core: Option<f64>,
    pub core_components: usize,
    pub core_area: f64,
    /// `area(∂B_K)`, the bound the core area is checked against.
    pub core_area_bound: f64,
    pub failure: Option<String>,
}

impl ExhaustionStage {
    pub fn core_area_ok(&self) -> bool {
        self.core_area <= self.core_area_bound
    }
}

/// Radial annulus from `inner` to `outer` (closed polylines, parameters matched
/// by index fraction) with roughly square cells.
fn collar(inner: &[Vec3], outer: &[Vec3]) -> Result<TriMesh> {
    let (ni, no) = (inner.len(), outer.len());
    let gap = (0..no)
        .map(|k| {
            let u = k as f64 / no as f64;
            distance_vec(polyline_at(inner, 0.0, u), outer[k])
        })
        .fold(0.0, f64::max);
    let spacing = |pts: &[Vec3]| (0..pts.len()).map(|i| distance_vec(pts[i], pts[(i + 1) % pts.len()])).sum::<f64>() / pts.len() as f64;
    let cell = spacing(inner).min(spacing(outer)).max(1e-3);
    let mut m = (math::ceil(gap / cell) as usize).max(1) + 1;
    if m % 2 == 0 {
        m += 1;
    }
    let counts: Vec<usize> = (0..m)
        .map(|k| {
            let t = k as f64 / (m - 1) as f64;
            if k == 0 {
                ni
            } else if k == m - 1 {
                no
            } else {
                math::round((1.0 - t) * ni as f64 + t * no as f64) as usize
            }
        })
        .collect();
    annulus_between(&counts, |s, u| {
        let (a, b) = (polyline_at(inner, 0.0, u), polyline_at(outer, 0.0, u));
        if s <= 0.0 {
            a
        } else if s >= 1.0 {
            b
        } else {
            geodesic_lerp(a, b, s)
        }
    })
}

/// Hyperbolic Hausdorff distance between `a` and `b` restricted to the ball
/// of radius `k` about the origin (vertex samples against full surfaces).
pub fn core_hausdorff(a: &TriMesh, b: &TriMesh, k: f64) -> f64 {
    let e = euclidean_from_radius(k);
    let one_way = |x: &TriMesh, y: &TriMesh| {
        x.vertices().iter().filter(|p| p.norm() <= e).map(|&p| point_mesh_distance(p, y)).fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

/// Number of connected pieces of `M ∩ B_k`, counted over the triangles that
/// meet the ball.
pub fn core_components(mesh: &TriMesh, k: f64) -> usize {
    let e = euclidean_from_radius(k);
    let inside: Vec<bool> = mesh.vertices().iter().map(|p| p.norm() <= e).collect();
    let n = mesh.num_vertices();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for t in mesh.triangles() {
        if t.iter().any(|&v| inside[v]) {
            for j in 1..3 {
                let (a, b) = (find(&mut parent, t[0]), find(&mut parent, t[j]));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut roots: Vec<usize> = (0..n).filter(|&v| inside[v]).map(|v| find(&mut parent, v)).collect();
    roots.sort_unstable();
    roots.dedup();
    roots.len()
}

/// Hyperbolic area of `M ∩ B_k`, by subdividing each nearby triangle 4⁴-fold and
/// keeping the sub-triangles whose centroid is inside.
pub fn area_within(mesh: &TriMesh, k: f64) -> f64 {
    let e = euclidean_from_radius(k);
    let reach = euclidean_from_radius(k + 1.0);
    let vs = mesh.vertices();
    let m = 16;
    let mut area = 0.0;
    for t in mesh.triangles() {
        let (a, b, c) = (vs[t[0]], vs[t[1]], vs[t[2]]);
        if [a, b, c].iter().all(|p| p.norm() > reach) {
            continue;
        }
        let (da, db) = ((b - a) / m as f64, (c - a) / m as f64);
        let sub = da.cross(db).norm() * 0.5;
        for i in 0..m {
            for j in 0..m - i {
                let p0 = a + da * i as f64 + db * j as f64;
                let mut tris = vec![(p0, p0 + da, p0 + db)];
                if i + j + 1 < m {
                    tris.push((p0 + da, p0 + da + db, p0 + db));
                }
                for (x, y, z) in tris {
                    let g = (x + y + z) / 3.0;
                    if g.norm() <= e {
                        let lam = 2.0 / (1.0 - g.norm2());
                        area += lam * lam * sub;
                    }
                }
            }
        }
    }
    area
}

/// Solve the minimizing H-disks on the radius schedule, warm-starting each stage
/// from the previous disk extended radially to the new boundary curve.
///
/// A stage failure ends the run; the stages so far are returned with the
/// failure recorded on the last one.
pub fn run_exhaustion(curve: &IdealCurve, cfg: &ExhaustionConfig) -> Result<Vec<ExhaustionStage>> {
    cfg.validate()?;
    let hull = supporting_halfspaces(curve, cfg.solver.h, cfg.hull_samples)?;
    let core_bound = geodesic_ball(cfg.core_radius)?.boundary_area();
    let mut stages: Vec<ExhaustionStage> = Vec::new();
    for (i, &r) in cfg.radii.iter().enumerate() {
        let ball = geodesic_ball(r)?;
        let band = band(curve, &hull, r, 2 * cfg.boundary_points(r))?;
        let gamma = boundary_curve(&band, cfg.boundary_points(r))?;
        let gap = ideal_gap(&gamma, curve);
        let mut stage = ExhaustionStage {
            n: i + 1,
            ball,
            gamma: gamma.clone(),
            band,
            ideal_gap: gap,
            disk: None,
            report: None,
            hausdorff_to_prev_on_core: None,
            core_components: 0,
            core_area: 0.0,
            core_area_bound: core_bound,
            failure: None,
        };
        let prev = stages.last().and_then(|s| s.disk.as_ref().map(|d| (d, &s.gamma)));
        let init = match prev {
            Some((disk, inner)) => match collar(inner, &gamma).and_then(|c| attach_annulus(disk, &c)) {
                Ok(m) => Some(m),
                Err(e) => {
                    stage.failure = Some(format!("warm start: {e}"));
                    stages.push(stage);
                    return Ok(stages);
                }
            },
            None => None,
        };
        let mut scfg = cfg.solver.clone();
        scfg.ball = ball;
        match minimize_disk(&gamma, &scfg, init) {
            Ok((disk, report)) => {
                stage.hausdorff_to_prev_on_core =
                    stages.last().and_then(|s| s.disk.as_ref()).map(|p| core_hausdorff(&disk, p, cfg.core_radius));
                stage.core_components = core_components(&disk, cfg.core_radius);
                stage.core_area = area_within(&disk, cfg.core_radius);
                if !report.converged {
                    stage.failure = Some(format!("solver stopped: {:?}", report.termination));
                }
                stage.disk = Some(disk);
                stage.report = Some(report);
                stages.push(stage);
            }
            Err(e) => {
                stage.failure = Some(format!("{e}"));
                stages.push(stage);
                return Ok(stages);
            }
        }
    }
    Ok(stages)
}

/// Settings of a barrier profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierConfig {
    pub hull_samples: usize,
    /// Target hyperbolic spacing along the band edges `α_r^±`, as a multiple of
    /// the narrowest band width (keeps the initial strip's triangles shaped).
    pub aspect: f64,
    /// Bounds on the number of points per band edge.
    pub min_edge_points: usize,
    pub max_edge_points: usize,
    /// Angular offset of `τ^±` from the smooth point.
    pub tau_offset: f64,
    /// Annulus solver settings (`H = 0`); the ball is replaced per radius.
    pub solver: SolverConfig,
}

impl BarrierConfig {
    pub fn new() -> Result<Self> {
        let mut solver = SolverConfig::new(0.0, 2.0)?;
        solver.init_edge_length = 0.1;
        Ok(BarrierConfig { hull_samples: 64, aspect: 4.0, min_edge_points: 96, max_edge_points: 1500, tau_offset: 0.05, solver })
    }
}

/// The barrier `F(r) = d(O, A_r)` on a radius grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierProfile {
    pub radii: Vec<f64>,
    /// `A_r` per radius (`None` where the solve degenerated).
    pub annuli: Vec<Option<TriMesh>>,
    pub f: Vec<Option<f64>>,
    /// Endpoints of the transversal probe arc `β` through the origin.
    pub probe: (Vec3, Vec3),
    /// Length `l` of `β`.
    pub probe_length: f64,
    /// First grid radius with a solved `A_r`.
    pub n0: Option<f64>,
    /// First grid radius with `F(r) > l`.
    pub r0: Option<f64>,
    pub tau: (RoundCircle, RoundCircle),
    /// Annotation when the profile was cut short after `N₀`.
    pub truncated: Option<String>,
}

impl BarrierProfile {
    /// `F` is non-decreasing over the solved radii (ties within 1e-6).
    pub fn monotone(&self) -> bool {
        let vals: Vec<f64> = self.f.iter().flatten().copied().collect();
        vals.windows(2).all(|w| w[1] >= w[0] - 1e-6)
    }

    /// `F` at grid radius `r`, if solved.
    pub fn at(&self, r: f64) -> Option<f64> {
        self.radii.iter().position(|&x| (x - r).abs() < 1e-12).and_then(|i| self.f[i])
    }
}

/// The two round circles `τ^±` on opposite sides of `Γ` near its smooth point:
/// centres on the normal great circle, nearest points at angle `offset` from the
/// curve, radius as large as allowed while staying disjoint from `Γ` (capped at π/4).
pub fn tau_circles(curve: &IdealCurve, offset: f64) -> Result<(RoundCircle, RoundCircle)> {
    let curve = curve.positively_ordered();
    let i = curve.smooth_index();
    let p = curve.point(i);
    let n = curve.normal_to_positive(i);
    let circle = |sign: f64, rho: f64| on_circle(p, n, sign * (offset + rho));
    let fits = |sign: f64, rho: f64| {
        let c = circle(sign, rho);
        curve.distance_to(c) > rho + 0.5 * offset
    };
    let mut out = [None, None];
    for (slot, sign) in out.iter_mut().zip([1.0, -1.0]) {
        if !fits(sign, 1e-3) {
            return Err(Error::DegenerateInput("no small circle fits beside the smooth point".into()));
        }
        let (mut lo, mut hi) = (1e-3, PI / 4.0);
        if fits(sign, hi) {
            lo = hi;
        } else {
            for _ in 0..50 {
                let mid = 0.5 * (lo + hi);
                if fits(sign, mid) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        }
        *slot = Some(RoundCircle::new(IdealPoint::from_direction(circle(sign, lo))?, lo)?);
    }
    Ok((out[0].unwrap(), out[1].unwrap()))
}

/// Transversal arc through the origin along the axis of `Γ`, clipped to the
/// sampled hull: returns the endpoints and the length.
pub fn probe_arc(curve: &IdealCurve, hull: &ShiftedHullSampler) -> Result<(Vec3, Vec3, f64)> {
    if hull.violation(Vec3::ZERO) > 0.0 {
        return Err(Error::InvalidInput("the sampled hull does not contain the origin".into()));
    }
    let axis = curve_axis(curve);
    let reach = |dir: Vec3| -> (Vec3, f64) {
        let at = |s: f64| dir * euclidean_from_radius(s);
        let (mut inside, mut out) = (0.0, 1e-3);
        while hull.violation(at(out)) <= 0.0 && out < 30.0 {
            inside = out;
            out *= 2.0;
        }
        for _ in 0..60 {
            let mid = 0.5 * (inside + out);
            if hull.violation(at(mid)) <= 0.0 {
                inside = mid;
            } else {
                out = mid;
            }
        }
        (at(inside), inside)
    };
    let (a, la) = reach(axis);
    let (b, lb) = reach(-axis);
    Ok((a, b, la + lb))
}

/// Strip mesh of the band, used to start the least-area annulus solve: columns
/// at the band samples, each split into rows of hyperbolic height about
/// `spacing`, interior rows pushed into the ball by `dip · sin(πt)`.
/// Returns the mesh and its two boundary loops (`α⁺` then `α⁻`).
pub fn band_strip(band: &AnnulusBand, spacing: f64, dip: f64) -> Result<(TriMesh, Vec<Vec3>, Vec<Vec3>)> {
    let n = band.samples();
    let sh = math::sinh(band.radius);
    let mut vertices = Vec::new();
    let mut columns: Vec<Vec<usize>> = Vec::with_capacity(n);
    for k in 0..n {
        let u = k as f64 / n as f64;
        let (lo, hi) = (band.lower[k], band.upper[k]);
        let w = (hi - lo) * sh;
        let m = (math::ceil(w / spacing) as usize).max(1) + 1;
        let col = (0..m)
            .map(|j| {
                let t = j as f64 / (m - 1) as f64;
                let d = band.point(u, lo + t * (hi - lo)).normalized();
                let depth = dip * w.min(1.0) * math::sin(PI * t);
                vertices.push(d * euclidean_from_radius(band.radius - depth));
                vertices.len() - 1
            })
            .collect();
        columns.push(col);
    }
    let mut tris = Vec::new();
    for k in 0..n {
        let (a, b) = (&columns[k], &columns[(k + 1) % n]);
        let (ma, mb) = ((a.len() - 1) as f64, (b.len() - 1) as f64);
        let (mut i, mut j) = (0, 0);
        while i + 1 < a.len() || j + 1 < b.len() {
            let step_a = j + 1 == b.len() || (i + 1 < a.len() && (i + 1) as f64 / ma <= (j + 1) as f64 / mb);
            if step_a {
                tris.push([a[i], a[i + 1], b[j]]);
                i += 1;
            } else {
                tris.push([a[i], b[j + 1], b[j]]);
                j += 1;
            }
        }
    }
    let directed: alloc::collections::BTreeSet<(usize, usize)> =
        tris.iter().flat_map(|t| [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])]).collect();
    let mut lower: Vec<usize> = columns.iter().map(|c| c[0]).collect();
    let mut upper: Vec<usize> = columns.iter().map(|c| *c.last().unwrap()).collect();
    if !directed.contains(&(lower[0], lower[1])) {
        lower.reverse();
    }
    if !directed.contains(&(upper[0], upper[1])) {
        upper.reverse();
    }
    let plus: Vec<Vec3> = upper.iter().map(|&v| vertices[v]).collect();
    let minus: Vec<Vec3> = lower.iter().map(|&v| vertices[v]).collect();
    let mesh = TriMesh::new(vertices, tris, vec![upper, lower], crate::mesh::Topology::Annulus)?;
    Ok((mesh, plus, minus))
}

/// Band sampled finely enough that the strip's columns are at most
/// `aspect × narrowest width` apart.
fn edge_band(curve: &IdealCurve, hull: &ShiftedHullSampler, r: f64, cfg: &BarrierConfig) -> Result<AnnulusBand> {
    let probe = band(curve, hull, r, cfg.min_edge_points)?;
    let narrow = probe.lower.iter().zip(&probe.upper).map(|(l, u)| u - l).fold(f64::INFINITY, f64::min);
    let len = curve.length() * math::sinh(r);
    let n = math::ceil(len / (cfg.aspect * narrow * math::sinh(r)).max(1e-9)) as usize;
    if n > cfg.max_edge_points {
        return Err(Error::InvalidParameter(format!(
            "band at r = {r} needs {n} edge points (limit {})",
            cfg.max_edge_points
        )));
    }
    band(curve, hull, r, n.max(cfg.min_edge_points))
}

/// Least-area annuli `A_r` spanning the band edges `α_r^±` of `CH(Γ)` and the
/// barrier function `F(r) = d(O, A_r)` (minimum over mesh vertices).
pub fn barrier_profile(curve: &IdealCurve, radii: &[f64], cfg: &BarrierConfig) -> Result<BarrierProfile> {
    if radii.is_empty() || radii.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("radius grid must be non-empty and increasing".into()));
    }
    let hull = supporting_halfspaces(curve, 0.0, cfg.hull_samples)?;
    let (a, b, l) = probe_arc(curve, &hull)?;
    let tau = tau_circles(curve, cfg.tau_offset)?;
    let mut profile = BarrierProfile {
        radii: radii.to_vec(),
        annuli: Vec::new(),
        f: Vec::new(),
        probe: (a, b),
        probe_length: l,
        n0: None,
        r0: None,
        tau,
        truncated: None,
    };
    for &r in radii {
        if profile.truncated.is_some() {
            profile.annuli.push(None);
            profile.f.push(None);
            continue;
        }
        let solved = edge_band(curve, &hull, r, cfg).and_then(|bd| {
            let narrow = bd.lower.iter().zip(&bd.upper).map(|(l, u)| u - l).fold(f64::INFINITY, f64::min) * math::sinh(r);
            let (init, plus, minus) = band_strip(&bd, (cfg.aspect * narrow).max(1e-3), 0.1)?;
            let mut scfg = cfg.solver.clone();
            scfg.h = 0.0;
            scfg.ball = geodesic_ball(r)?;
            minimize_annulus(&plus, &minus, &scfg, Some(init))
        });
        match solved {
            Ok((m, _)) => {
                let f = m.vertices().iter().map(|&p| distance_vec(Vec3::ZERO, p)).fold(f64::INFINITY, f64::min);
                profile.n0.get_or_insert(r);
                if profile.r0.is_none() && f > l {
                    profile.r0 = Some(r);
                }
                profile.annuli.push(Some(m));
                profile.f.push(Some(f));
            }
            Err(e) => {
                if profile.n0.is_some() {
                    profile.truncated = Some(format!("r = {r}: {e}"));
                }
                profile.annuli.push(None);
                profile.f.push(None);
            }
        }
    }
    Ok(profile)
}

/// Hyperbolic distance from the origin to a mesh (minimum over vertices).
pub fn distance_from_origin(mesh: &TriMesh) -> f64 {
    mesh.vertices().iter().map(|&p| distance_vec(Vec3::ZERO, p)).fold(f64::INFINITY, f64::min)
}
