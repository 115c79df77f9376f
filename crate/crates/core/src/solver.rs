//! Minimisation of `I_H` over meshes with fixed boundary inside a geodesic ball,
//! and least-area annuli.
//!
//! The descent is a projected L-BFGS iteration with Armijo backtracking,
//! preconditioned by the inverse lumped hyperbolic mass `1/(λ² M_i)` so that a
//! unit step moves a vertex roughly by its mean-curvature residual. Trial steps
//! are projected onto the closed solver ball and rejected if they would create
//! a triangle sharper than the mesh invariant allows or flip a triangle.

use crate::error::{Error, Result};
use crate::hyperbolic::{distance_vec, geodesic_ball, geodesic_lerp, GeodesicBall};
use crate::math::{self, Vec3, PI};
use crate::mesh::{
    annulus_between, hyperbolic_sup_norm, refine_with, ring_disk, triangle_min_angle_deg, EnergyModel, EnergyReport,
    Quadrature, RemeshOptions, RingSchedule, Topology, TriMesh, MIN_ANGLE_DEG,
};
use alloc::collections::VecDeque;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// Solver settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub h: f64,
    pub max_iterations: usize,
    /// Stop once `sup |∇I_H|/λ` over interior vertices falls below this.
    pub gradient_tolerance: f64,
    pub backtracking: f64,
    pub sufficient_decrease: f64,
    /// Remeshing cadence in iterations (0 disables).
    pub remesh_every: usize,
    /// Hyperbolic edge-length target for remeshing; `None` means edge flips only.
    pub target_edge_length: Option<f64>,
    /// Edge length used by the default initial meshes.
    pub init_edge_length: f64,
    pub ball: GeodesicBall,
    pub lbfgs_memory: usize,
    pub quadrature: Quadrature,
    pub seed: u64,
}

impl SolverConfig {
    pub fn new(h: f64, ball_radius: f64) -> Result<Self> {
        let cfg = SolverConfig {
            h,
            max_iterations: 4000,
            gradient_tolerance: 1e-5,
            backtracking: 0.5,
            sufficient_decrease: 1e-4,
            remesh_every: 50,
            target_edge_length: None,
            init_edge_length: 0.15,
            ball: geodesic_ball(ball_radius)?,
            lbfgs_memory: 8,
            quadrature: Quadrature::Order2,
            seed: 0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h.abs() < 1.0) {
            return Err(Error::InvalidParameter(format!("|H| must be < 1, got {}", self.h)));
        }
        // 1-convexity of the solver ball: its boundary has mean curvature coth r > 1 > |H|.
        if !(self.h.abs() < self.ball.boundary_mean_curvature()) {
            return Err(Error::InvalidParameter("solver ball is not H-convex".into()));
        }
        if !(self.backtracking > 0.0 && self.backtracking < 1.0) {
            return Err(Error::InvalidParameter(format!("backtracking factor {} not in (0, 1)", self.backtracking)));
        }
        if !(self.sufficient_decrease > 0.0 && self.sufficient_decrease < 0.5) {
            return Err(Error::InvalidParameter("sufficient-decrease constant must be in (0, 0.5)".into()));
        }
        if !(self.gradient_tolerance > 0.0) || !(self.init_edge_length > 0.0) {
            return Err(Error::InvalidParameter("tolerances and lengths must be positive".into()));
        }
        if let Some(l) = self.target_edge_length {
            if !(l > 0.0) {
                return Err(Error::InvalidParameter(format!("target edge length {l} must be positive")));
            }
        }
        Ok(())
    }
}

/// Why a solve stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Converged,
    MaxIterations,
    /// The line search could not make progress (step below `1e-14 · scale`).
    Stalled,
}

/// Outcome of a solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub energy: EnergyReport,
    pub iterations: usize,
    /// `I_H` after every accepted step (first entry: the initial mesh).
    pub energy_history: Vec<f64>,
    pub gradient_history: Vec<f64>,
    pub projections: usize,
    pub remeshes: usize,
    pub converged: bool,
    pub termination: Termination,
}

impl SolveReport {
    /// Whether the recorded energies never increase.
    pub fn history_monotone(&self) -> bool {
        self.energy_history.windows(2).all(|w| w[1] <= w[0])
    }
}

/// Piecewise-linear interpolation of a closed polyline whose vertex `i` sits at
/// parameter `(i + shift) / n`.
pub(crate) fn polyline_at(points: &[Vec3], shift: f64, u: f64) -> Vec3 {
    let n = points.len();
    let nf = n as f64;
    let x = u * nf - shift;
    let x = x - nf * math::floor(x / nf);
    let i = (math::floor(x) as usize).min(n - 1);
    let t = x - i as f64;
    if t < 1e-12 {
        return points[i];
    }
    points[i].lerp(points[(i + 1) % n], t)
}

fn check_boundary(boundary: &[Vec3], ball: &GeodesicBall) -> Result<()> {
    if boundary.len() < 3 {
        return Err(Error::InvalidInput("boundary needs at least 3 points".into()));
    }
    for p in boundary {
        if p.norm() > ball.euclidean_radius * (1.0 + 1e-9) {
            return Err(Error::InvalidInput("boundary point outside the solver ball".into()));
        }
    }
    if !polyline_is_simple(boundary) {
        return Err(Error::NonSimpleBoundary("boundary polyline self-intersects".into()));
    }
    Ok(())
}

/// Simplicity test for a closed polyline: planar polylines are tested in their
/// plane, all others by central projection onto the unit sphere.
pub fn polyline_is_simple(points: &[Vec3]) -> bool {
    let n = points.len();
    for i in 0..n {
        if (points[i] - points[(i + 1) % n]).norm() < 1e-14 {
            return false;
        }
    }
    let c = points.iter().fold(Vec3::ZERO, |s, &p| s + p) / n as f64;
    let area = (0..n).fold(Vec3::ZERO, |s, i| s + (points[i] - c).cross(points[(i + 1) % n] - c));
    let size = points.iter().map(|p| (*p - c).norm()).fold(0.0, f64::max);
    let normal = area.normalized();
    let planar = area.norm() > 0.0 && points.iter().all(|p| (*p - c).dot(normal).abs() <= 1e-9 * size);
    let crosses = |i: usize, j: usize| -> bool {
        let (a, b, p, q) = (points[i], points[(i + 1) % n], points[j], points[(j + 1) % n]);
        if planar {
            let e1 = normal.any_orthogonal().normalized();
            let e2 = normal.cross(e1);
            let f = |v: Vec3| ((v - c).dot(e1), (v - c).dot(e2));
            segments_cross(f(a), f(b), f(p), f(q))
        } else {
            crate::umbilic::curve::arcs_cross(a.normalized(), b.normalized(), p.normalized(), q.normalized())
        }
    };
    for i in 0..n {
        for j in i + 2..n {
            if !(i == 0 && j == n - 1) && crosses(i, j) {
                return false;
            }
        }
    }
    true
}

fn segments_cross(a: (f64, f64), b: (f64, f64), c: (f64, f64), d: (f64, f64)) -> bool {
    let orient = |p: (f64, f64), q: (f64, f64), r: (f64, f64)| (q.0 - p.0) * (r.1 - p.1) - (q.1 - p.1) * (r.0 - p.0);
    let (o1, o2, o3, o4) = (orient(a, b, c), orient(a, b, d), orient(c, d, a), orient(c, d, b));
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

/// Geodesic cone from the boundary centroid, on graded rings whose outer ring
/// is exactly the boundary polyline.
pub fn cone_init(boundary: &[Vec3], edge_length: f64) -> Result<TriMesh> {
    let n = boundary.len();
    let c = boundary.iter().fold(Vec3::ZERO, |s, &p| s + p) / n as f64;
    let outer = boundary.iter().map(|&p| distance_vec(c, p)).sum::<f64>() / n as f64;
    let mut sched = RingSchedule::graded(outer, &[], edge_length, n, 0.35)?;
    let last = sched.counts.len() - 1;
    sched.counts[last] = n;
    let shift = if last % 2 == 1 { 0.5 } else { 0.0 };
    ring_disk(&sched, |rho, u| {
        if rho == 0.0 {
            return c;
        }
        let b = polyline_at(boundary, shift, u);
        geodesic_lerp(c, b, (rho / outer).min(1.0))
    })
}

/// Ruled annulus of geodesic segments between two closed polylines.
pub fn annulus_init(plus: &[Vec3], minus: &[Vec3], edge_length: f64) -> Result<TriMesh> {
    let d = plus
        .iter()
        .enumerate()
        .map(|(i, &p)| distance_vec(p, polyline_at(minus, 0.0, i as f64 / plus.len() as f64)))
        .fold(0.0, f64::max);
    let mut m = (math::ceil(d / edge_length) as usize).max(2) + 1;
    // Odd ring count so that both end rings carry the unshifted parameters.
    if m % 2 == 0 {
        m += 1;
    }
    let counts: Vec<usize> = (0..m)
        .map(|k| {
            let t = k as f64 / (m - 1) as f64;
            if k == 0 {
                plus.len()
            } else if k == m - 1 {
                minus.len()
            } else {
                math::round((1.0 - t) * plus.len() as f64 + t * minus.len() as f64) as usize
            }
        })
        .collect();
    annulus_between(&counts, |s, u| {
        let (a, b) = (polyline_at(plus, 0.0, u), polyline_at(minus, 0.0, u));
        if s <= 0.0 {
            a
        } else if s >= 1.0 {
            b
        } else {
            geodesic_lerp(a, b, s)
        }
    })
}

/// Repairs are attempted once the smallest triangle angle drops below this.
const REPAIR_ANGLE_DEG: f64 = 8.0;
/// Weight of the tangential gradient in the search direction. Tangential
/// components only slide vertices along the surface; left at full weight they
/// drive the mesh toward slivers long before the shape has converged.
const TANGENTIAL_WEIGHT: f64 = 0.0;

/// Iteration state of one solve.
#[derive(Clone)]
struct Descent<'a> {
    cfg: &'a SolverConfig,
    mesh: TriMesh,
    model: EnergyModel,
    fixed: Vec<bool>,
    o: Vec3,
    energy: f64,
    grad: Vec<Vec3>,
    /// Search gradient: `grad` with damped tangential part, zero on fixed vertices.
    sgrad: Vec<Vec3>,
    memory: VecDeque<(Vec<Vec3>, Vec<Vec3>, f64)>,
    projections: usize,
    fresh: bool,
}

impl<'a> Descent<'a> {
    fn new(mesh: TriMesh, cfg: &'a SolverConfig) -> Result<Self> {
        let model = EnergyModel::adaptive(&mesh, cfg.quadrature);
        let (energy, grad) = model.value_and_gradient(&mesh, cfg.h, Vec3::ZERO)?;
        let fixed = mesh.boundary_mask();
        let sgrad = search_gradient(&mesh, &grad, &fixed, TANGENTIAL_WEIGHT);
        Ok(Descent {
            cfg,
            mesh,
            model,
            fixed,
            o: Vec3::ZERO,
            energy,
            grad,
            sgrad,
            memory: VecDeque::new(),
            projections: 0,
            fresh: true,
        })
    }

    /// Tangential components are not a defect of the shape, so stationarity
    /// is measured on the normal part.
    fn grad_norm(&self) -> f64 {
        let normal = search_gradient(&self.mesh, &self.grad, &self.fixed, 0.0);
        hyperbolic_sup_norm(self.mesh.vertices(), &normal, &self.fixed)
    }

    /// Inverse lumped hyperbolic mass `1/(λ² M_i)` per vertex.
    fn preconditioner(&self) -> Vec<f64> {
        let vs = self.mesh.vertices();
        let mut mass = vec![0.0; vs.len()];
        for (ti, t) in self.mesh.triangles().iter().enumerate() {
            let c = (vs[t[0]] + vs[t[1]] + vs[t[2]]) / 3.0;
            let lam = 2.0 / (1.0 - c.norm2());
            let a = self.mesh.area_vector(ti).norm() * lam * lam / 3.0;
            for &v in t {
                mass[v] += a;
            }
        }
        vs.iter()
            .zip(mass)
            .zip(&self.fixed)
            .map(|((p, m), &f)| {
                if f {
                    0.0
                } else {
                    let lam = 2.0 / (1.0 - p.norm2());
                    1.0 / (lam * lam * m.max(1e-300))
                }
            })
            .collect()
    }

    fn direction(&self, precond: &[f64]) -> Vec<Vec3> {
        let mut q = self.sgrad.clone();
        let mut alphas = Vec::with_capacity(self.memory.len());
        for (s, y, rho) in self.memory.iter().rev() {
            let a = rho * dot(s, &q);
            axpy(&mut q, -a, y);
            alphas.push(a);
        }
        let gamma = match self.memory.back() {
            Some((s, y, _)) => {
                let sy = dot(s, y);
                let yhy: f64 = y.iter().zip(precond).map(|(v, p)| v.norm2() * p).sum();
                if yhy > 0.0 {
                    sy / yhy
                } else {
                    1.0
                }
            }
            None => 1.0,
        };
        let mut r: Vec<Vec3> = q.iter().zip(precond).map(|(v, p)| *v * (p * gamma)).collect();
        for ((s, y, rho), a) in self.memory.iter().zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &r);
            axpy(&mut r, a - b, s);
        }
        r.iter().map(|v| -*v).collect()
    }

    /// Largest step for which no vertex moves farther than a fraction of its
    /// shortest incident hyperbolic edge.
    fn step_cap(&self, d: &[Vec3]) -> f64 {
        let vs = self.mesh.vertices();
        let mut shortest = vec![f64::INFINITY; vs.len()];
        for t in self.mesh.triangles() {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let l = distance_vec(vs[a], vs[b]);
                shortest[a] = shortest[a].min(l);
                shortest[b] = shortest[b].min(l);
            }
        }
        let mut cap = f64::INFINITY;
        for i in 0..vs.len() {
            if self.fixed[i] {
                continue;
            }
            let lam = 2.0 / (1.0 - vs[i].norm2());
            let mv = lam * d[i].norm();
            if mv > 0.0 {
                cap = cap.min(0.3 * shortest[i] / mv);
            }
        }
        cap
    }

    /// Trial positions `P(x + αd)` or `None` when they break the invariants.
    fn trial(&self, d: &[Vec3], alpha: f64) -> Option<(Vec<Vec3>, usize)> {
        let r_max = self.cfg.ball.euclidean_radius;
        let mut proj = 0;
        let vs = self.mesh.vertices();
        let mut x: Vec<Vec3> = Vec::with_capacity(vs.len());
        for i in 0..vs.len() {
            if self.fixed[i] {
                x.push(vs[i]);
                continue;
            }
            let mut p = vs[i] + d[i] * alpha;
            let r = p.norm();
            if r > r_max {
                p = p * (r_max / r);
                proj += 1;
            }
            x.push(p);
        }
        for t in self.mesh.triangles() {
            let (a, b, c) = (x[t[0]], x[t[1]], x[t[2]]);
            let n_new = (b - a).cross(c - a);
            let n_old = (vs[t[1]] - vs[t[0]]).cross(vs[t[2]] - vs[t[0]]);
            if n_new.dot(n_old) <= 0.0 || !(triangle_min_angle_deg(a, b, c) >= MIN_ANGLE_DEG) {
                return None;
            }
        }
        Some((x, proj))
    }

    /// One projected line search along `d`. Returns the accepted step length.
    fn line_search(&mut self, d: &[Vec3], initial: f64) -> Result<Option<f64>> {
        let c1 = self.cfg.sufficient_decrease;
        let scale = self.mesh.vertices().iter().map(|v| v.norm()).fold(1e-3, f64::max);
        let dmax = d.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let mut alpha = initial;
        while alpha * dmax > 1e-14 * scale {
            if let Some((x, proj)) = self.trial(d, alpha) {
                let trial = self.mesh.with_positions_unchecked(x);
                let (e, g) = self.model.value_and_gradient(&trial, self.cfg.h, self.o)?;
                let decrease: f64 = trial
                    .vertices()
                    .iter()
                    .zip(self.mesh.vertices())
                    .zip(&self.grad)
                    .map(|((xn, xo), g)| g.dot(*xn - *xo))
                    .sum();
                if e <= self.energy + c1 * decrease && e < self.energy {
                    let s: Vec<Vec3> = trial.vertices().iter().zip(self.mesh.vertices()).map(|(a, b)| *a - *b).collect();
                    let pg = search_gradient(&trial, &g, &self.fixed, TANGENTIAL_WEIGHT);
                    let y: Vec<Vec3> = pg.iter().zip(&self.sgrad).map(|(a, b)| *a - *b).collect();
                    let sy = dot(&s, &y);
                    if sy > 1e-14 * math::sqrt(dot(&s, &s) * dot(&y, &y)) {
                        if self.memory.len() == self.cfg.lbfgs_memory.max(1) {
                            self.memory.pop_front();
                        }
                        self.memory.push_back((s, y, 1.0 / sy));
                    }
                    self.mesh = trial;
                    self.energy = e;
                    self.grad = g;
                    self.sgrad = pg;
                    self.projections += proj;
                    return Ok(Some(alpha));
                }
            }
            alpha *= self.cfg.backtracking;
        }
        Ok(None)
    }

    /// Swap in a remeshed surface, rebuilding the energy model.
    fn reset_mesh(&mut self, mesh: TriMesh) -> Result<()> {
        let model = EnergyModel::adaptive(&mesh, self.cfg.quadrature);
        let (e, g) = model.value_and_gradient(&mesh, self.cfg.h, self.o)?;
        self.fixed = mesh.boundary_mask();
        self.sgrad = search_gradient(&mesh, &g, &self.fixed, TANGENTIAL_WEIGHT);
        self.mesh = mesh;
        self.model = model;
        self.energy = e;
        self.grad = g;
        self.memory.clear();
        self.fresh = true;
        Ok(())
    }

    /// Periodic edge flips; kept only when the energy does not increase.
    fn remesh(&mut self) -> Result<bool> {
        let opts = RemeshOptions {
            target: self.cfg.target_edge_length,
            split_boundary: false,
            flips: true,
            smoothing_iterations: 0,
            max_passes: 2,
            collapse_relative: 0.0,
        };
        let Ok(candidate) = refine_with(&self.mesh, &opts) else {
            return Ok(false);
        };
        if candidate.triangles() == self.mesh.triangles() && candidate.vertices() == self.mesh.vertices() {
            return Ok(false);
        }
        let mut trial = self.clone();
        trial.reset_mesh(candidate)?;
        if trial.energy <= self.energy {
            *self = trial;
            return Ok(true);
        }
        Ok(false)
    }

    /// Clean up slivers (collapse, flips, tangential smoothing). The repaired
    /// mesh usually starts slightly above the current energy, so it is descended
    /// on its own and adopted only once it is strictly below; otherwise the
    /// current iterate is kept. Returns the number of look-ahead iterations and
    /// whether the repair was adopted.
    fn repair(&mut self, budget: usize) -> Result<(usize, bool)> {
        let opts = RemeshOptions {
            target: None,
            split_boundary: false,
            flips: true,
            smoothing_iterations: 2,
            max_passes: 3,
            collapse_relative: 0.3,
        };
        let Ok(candidate) = refine_with(&self.mesh, &opts) else {
            return Ok((0, false));
        };
        let mut trial = self.clone();
        trial.reset_mesh(candidate)?;
        let mut used = 0;
        while trial.energy >= self.energy && used < budget {
            if !trial.iterate()? {
                break;
            }
            used += 1;
        }
        let adopted = trial.energy < self.energy;
        if adopted {
            *self = trial;
        } else {
            self.projections = trial.projections;
        }
        Ok((used, adopted))
    }

    /// One L-BFGS step. `false` when no admissible decrease exists even from
    /// a cleared memory.
    fn iterate(&mut self) -> Result<bool> {
        loop {
            let precond = self.preconditioner();
            let d = self.direction(&precond);
            let slope = dot(&d, &self.sgrad);
            let usable = slope < 0.0;
            if usable {
                let initial: f64 = if self.fresh || self.memory.is_empty() { 0.5 } else { 1.0 };
                let cap = self.step_cap(&d);
                if self.line_search(&d, initial.min(cap))?.is_some() {
                    self.fresh = false;
                    return Ok(true);
                }
            }
            if self.memory.is_empty() {
                return Ok(false);
            }
            self.memory.clear();
            self.fresh = true;
        }
    }

    fn run(mut self) -> Result<(TriMesh, SolveReport)> {
        let mut history = vec![self.energy];
        let mut ghist = vec![self.grad_norm()];
        let mut termination = Termination::MaxIterations;
        let mut iterations = 0;
        let mut remeshes = 0;
        // Iteration of the last failed repair; retried only after a full cadence.
        let mut repair_failed: Option<usize> = None;
        let cadence = self.cfg.remesh_every.max(20);
        while iterations < self.cfg.max_iterations {
            if self.grad_norm() <= self.cfg.gradient_tolerance {
                termination = Termination::Converged;
                break;
            }
            let moved = self.iterate()?;
            if moved {
                iterations += 1;
                history.push(self.energy);
                ghist.push(self.grad_norm());
            }
            let sliver = self.mesh.min_angle_deg() < REPAIR_ANGLE_DEG;
            let may_repair = repair_failed.map_or(true, |k| iterations >= k + cadence);
            if (!moved || sliver) && may_repair {
                let budget = cadence.min(self.cfg.max_iterations - iterations);
                let (used, adopted) = self.repair(budget)?;
                iterations += used;
                if adopted {
                    remeshes += 1;
                    repair_failed = None;
                    history.push(self.energy);
                    ghist.push(self.grad_norm());
                    continue;
                }
                repair_failed = Some(iterations);
            }
            if !moved {
                termination = Termination::Stalled;
                break;
            }
            if self.cfg.remesh_every > 0 && iterations % self.cfg.remesh_every == 0 && self.remesh()? {
                remeshes += 1;
                history.push(self.energy);
                ghist.push(self.grad_norm());
            }
        }
        let energy = self.report()?;
        let converged = termination == Termination::Converged;
        Ok((
            self.mesh,
            SolveReport {
                energy,
                iterations,
                energy_history: history,
                gradient_history: ghist,
                projections: self.projections,
                remeshes,
                converged,
                termination,
            },
        ))
    }

    fn report(&self) -> Result<EnergyReport> {
        let (area, volume) = self.model.area_volume(&self.mesh, self.o)?;
        Ok(EnergyReport {
            area,
            volume,
            h: self.cfg.h,
            i_h: area + 2.0 * self.cfg.h * volume,
            gradient_sup_norm: self.grad_norm(),
            quadrature_error: Vec::new(),
        })
    }
}

/// `n (g·n) + w (g − n (g·n))` per free vertex, with `n` the vertex normal.
fn search_gradient(mesh: &TriMesh, g: &[Vec3], fixed: &[bool], w: f64) -> Vec<Vec3> {
    mesh.vertex_normals()
        .into_iter()
        .zip(g)
        .zip(fixed)
        .map(|((n, g), &f)| {
            if f {
                Vec3::ZERO
            } else {
                let gn = n * g.dot(n);
                gn + (*g - gn) * w
            }
        })
        .collect()
}

fn dot(a: &[Vec3], b: &[Vec3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(*y)).sum()
}

fn axpy(y: &mut [Vec3], a: f64, x: &[Vec3]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += *xi * a;
    }
}

fn check_init(init: &TriMesh, topology: Topology, cfg: &SolverConfig) -> Result<()> {
    if init.topology() != topology {
        return Err(Error::InvalidInput(format!("initial mesh must be a {topology:?}")));
    }
    init.validate()?;
    if init.max_radius() > cfg.ball.euclidean_radius * (1.0 + 1e-9) {
        return Err(Error::InvalidInput("initial mesh leaves the solver ball".into()));
    }
    Ok(())
}

/// Minimise `I_H` over disks spanning `boundary` inside the solver ball.
///
/// Without `init` the geodesic cone from the boundary centroid is used. With an
/// `init`, its boundary loop is the fixed boundary and `boundary` is only used
/// for validation.
pub fn minimize_disk(boundary: &[Vec3], cfg: &SolverConfig, init: Option<TriMesh>) -> Result<(TriMesh, SolveReport)> {
    cfg.validate()?;
    check_boundary(boundary, &cfg.ball)?;
    let mesh = match init {
        Some(m) => {
            check_init(&m, Topology::Disk, cfg)?;
            let l = &m.boundary_loops()[0];
            if l.len() != boundary.len() {
                return Err(Error::InvalidInput("initial mesh boundary does not match the boundary polyline".into()));
            }
            m
        }
        None => cone_init(boundary, cfg.init_edge_length)?,
    };
    Descent::new(mesh, cfg)?.run()
}

/// Hyperbolic length of each cross-section of an annulus, taken as the edges
/// joining vertices at equal combinatorial distance from the first boundary loop.
pub fn cross_section_lengths(mesh: &TriMesh) -> Vec<f64> {
    let nb = mesh.vertex_neighbors();
    let mut level = vec![usize::MAX; mesh.num_vertices()];
    let mut queue = VecDeque::new();
    if let Some(l) = mesh.boundary_loops().first() {
        for &v in l {
            level[v] = 0;
            queue.push_back(v);
        }
    }
    while let Some(v) = queue.pop_front() {
        for &w in &nb[v] {
            if level[w] == usize::MAX {
                level[w] = level[v] + 1;
                queue.push_back(w);
            }
        }
    }
    let top = level.iter().copied().filter(|&l| l != usize::MAX).max().unwrap_or(0);
    let mut len = vec![0.0; top + 1];
    for (a, b) in mesh.edges() {
        if level[a] == level[b] && level[a] != usize::MAX {
            len[level[a]] += distance_vec(mesh.vertices()[a], mesh.vertices()[b]);
        }
    }
    len
}

/// Neck pinch threshold on the hyperbolic cross-section length.
pub const NECK_PINCH: f64 = 1e-3;

/// Least-area annulus between two closed polylines (`cfg.h` must be 0).
///
/// Degeneration is reported when the thinnest cross-section drops below
/// [`NECK_PINCH`], or when the descent stalls while the neck keeps shrinking
/// below a small fraction of the boundary length.
pub fn minimize_annulus(
    plus: &[Vec3],
    minus: &[Vec3],
    cfg: &SolverConfig,
    init: Option<TriMesh>,
) -> Result<(TriMesh, SolveReport)> {
    cfg.validate()?;
    if cfg.h != 0.0 {
        return Err(Error::InvalidParameter("least-area annuli use H = 0".into()));
    }
    check_boundary(plus, &cfg.ball)?;
    check_boundary(minus, &cfg.ball)?;
    let mesh = match init {
        Some(m) => {
            check_init(&m, Topology::Annulus, cfg)?;
            m
        }
        // Canonical order, so relabelling the two boundaries reproduces the same solve.
        None if polyline_order(minus, plus).is_lt() => annulus_init(minus, plus, cfg.init_edge_length)?,
        None => annulus_init(plus, minus, cfg.init_edge_length)?,
    };
    let (m, report) = Descent::new(mesh, cfg)?.run()?;
    let sections = cross_section_lengths(&m);
    let min_c = sections.iter().copied().fold(f64::INFINITY, f64::min);
    let boundary_len = sections.first().copied().unwrap_or(0.0).min(sections.last().copied().unwrap_or(0.0));
    let pinched = min_c < NECK_PINCH || (!report.converged && min_c < 0.05 * boundary_len);
    if pinched {
        return Err(Error::AnnulusDegeneration { min_circumference: min_c });
    }
    Ok((m, report))
}

fn polyline_order(a: &[Vec3], b: &[Vec3]) -> core::cmp::Ordering {
    a.len().cmp(&b.len()).then_with(|| {
        a.iter()
            .zip(b)
            .flat_map(|(p, q)| [(p.x, q.x), (p.y, q.y), (p.z, q.z)])
            .map(|(x, y)| x.total_cmp(&y))
            .find(|o| o.is_ne())
            .unwrap_or(core::cmp::Ordering::Equal)
    })
}

/// One preconditioned gradient step with backtracking line search.
///
/// Returns the new mesh, whether a step was accepted, and the step length.
pub fn descend_step(mesh: &TriMesh, cfg: &SolverConfig) -> Result<(TriMesh, bool, f64)> {
    cfg.validate()?;
    let mut state = Descent::new(mesh.clone(), cfg)?;
    if state.grad_norm() <= cfg.gradient_tolerance {
        return Ok((mesh.clone(), false, 0.0));
    }
    let precond = state.preconditioner();
    let d: Vec<Vec3> = state.grad.iter().zip(&precond).map(|(g, p)| -*g * *p).collect();
    let cap = state.step_cap(&d);
    match state.line_search(&d, cap.min(0.5))? {
        Some(a) => Ok((state.mesh, true, a)),
        None => Ok((mesh.clone(), false, 0.0)),
    }
}

/// Rotationally symmetric minimal annuli about a geodesic axis.
///
/// In coordinates `X = (cosh u cosh s, sinh s cos θ, sinh s sin θ, sinh u cosh s)`,
/// with `s` the distance to the axis and `u` the arclength along it, a minimal
/// surface of revolution satisfies `sinh s cosh² s / √(cosh² s + s'²) = C`.
pub mod catenoid {
    use super::*;

    /// Half-height `u` reached from the neck radius `s_m` to radius `s`.
    pub fn half_height(s_m: f64, s: f64) -> f64 {
        if s <= s_m {
            return 0.0;
        }
        let c = math::sinh(s_m) * math::cosh(s_m);
        // s = s_m + w² removes the inverse square-root singularity at the neck.
        let f = |w: f64| {
            let x = s_m + w * w;
            let (sh, ch) = (math::sinh(x), math::cosh(x));
            let q = sh * sh * ch * ch / (c * c) - 1.0;
            if w == 0.0 {
                // q ≈ q'(s_m) w² near the neck.
                let dq = 2.0 * math::sinh(2.0 * s_m) * math::cosh(2.0 * s_m) / (2.0 * c * c);
                return 2.0 / (ch * math::sqrt(dq));
            }
            2.0 * w / (ch * math::sqrt(q.max(1e-300)))
        };
        simpson(f, 0.0, math::sqrt(s - s_m), 400)
    }

    fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        let n = n + n % 2;
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += f(a + h * i as f64) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    /// Largest half-height achievable with boundary radius `s_b`, and the neck radius attaining it.
    pub fn max_half_height(s_b: f64) -> (f64, f64) {
        let (s_m, u) = math::golden_min(|s| -half_height(s, s_b), 1e-4 * s_b, s_b * (1.0 - 1e-9), 80);
        (-u, s_m)
    }

    /// Neck radius of the stable (wider) catenoid with boundary radius `s_b`
    /// at half-height `u_b`, or `None` beyond the existence threshold.
    pub fn neck_radius(s_b: f64, u_b: f64) -> Option<f64> {
        let (u_max, s_star) = max_half_height(s_b);
        if u_b > u_max {
            return None;
        }
        // half_height decreases from its maximum to 0 as s_m runs from s_star to s_b.
        let (mut lo, mut hi) = (s_star, s_b);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if half_height(mid, s_b) > u_b {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }

    /// Ball point with axis coordinate `u`, radius `s` and angle `θ` (axis = z).
    pub fn point(u: f64, s: f64, theta: f64) -> Vec3 {
        let x = Vec3::new(math::sinh(s) * math::cos(theta), math::sinh(s) * math::sin(theta), math::sinh(u) * math::cosh(s));
        crate::hyperbolic::from_hyperboloid(x)
    }

    /// Distance to the z axis of a ball point.
    pub fn axis_distance(p: Vec3) -> f64 {
        let rho = math::sqrt(p.x * p.x + p.y * p.y);
        math::asinh(2.0 * rho / (1.0 - p.norm2()))
    }

    /// Boundary circle at axis coordinate `u`, radius `s`, with `n` points, counter-clockwise about `+z`.
    pub fn circle(u: f64, s: f64, n: usize) -> Vec<Vec3> {
        (0..n).map(|i| point(u, s, 2.0 * PI * i as f64 / n as f64)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperbolic::euclidean_from_radius;
    use crate::umbilic::{umbilic_cap, RoundCircle, Side};

    fn equator_polyline(r: f64, n: usize) -> Vec<Vec3> {
        let e = euclidean_from_radius(r);
        (0..n).map(|i| {
            let t = 2.0 * PI * i as f64 / n as f64;
            Vec3::new(e * math::cos(t), e * math::sin(t), 0.0)
        })
        .collect()
    }

    #[test]
    fn flat_boundary_gives_flat_disk() {
        let mut cfg = SolverConfig::new(0.0, 3.0).unwrap();
        cfg.init_edge_length = 0.3;
        let b = equator_polyline(3.0, 96);
        let (m, rep) = minimize_disk(&b, &cfg, None).unwrap();
        assert!(rep.history_monotone());
        assert!(m.vertices().iter().all(|v| v.z.abs() <= 1e-3));
        m.validate().unwrap();
    }

    #[test]
    fn tiny_circle_gives_tiny_disk() {
        let mut cfg = SolverConfig::new(0.9, 1.0).unwrap();
        cfg.init_edge_length = 0.002;
        let b: Vec<Vec3> = (0..24)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / 24.0;
                Vec3::new(0.3 + 0.0025 * math::cos(t), 0.0025 * math::sin(t), 0.1)
            })
            .collect();
        let (m, rep) = minimize_disk(&b, &cfg, None).unwrap();
        assert!(rep.energy.area <= 1e-4, "{}", rep.energy.area);
        m.validate().unwrap();
    }

    #[test]
    fn rejects_bad_configs_and_boundaries() {
        assert!(SolverConfig::new(1.0, 3.0).is_err());
        let cfg = SolverConfig::new(0.2, 2.0).unwrap();
        let far = equator_polyline(3.0, 32);
        assert!(minimize_disk(&far, &cfg, None).is_err());
        let mut bow = equator_polyline(1.0, 32);
        bow.swap(3, 20);
        assert!(matches!(minimize_disk(&bow, &cfg, None), Err(Error::NonSimpleBoundary(_))));
    }

    #[test]
    fn step_decreases_energy_on_perturbed_cap() {
        let cap = umbilic_cap(RoundCircle::equator(), 0.4, Side::Plus).unwrap();
        let m = crate::mesh::exact_cap_mesh(&cap, 1.5, 0.2).unwrap();
        let fixed = m.boundary_mask();
        let mut rng = crate::math::SplitMix64::new(5);
        let v: Vec<Vec3> = m
            .vertices()
            .iter()
            .zip(&fixed)
            .map(|(p, &f)| if f { *p } else { *p + Vec3::new(0.0, 0.0, 0.02 * (rng.next_f64() - 0.5)) })
            .collect();
        let m = m.with_positions(v).unwrap();
        let cfg = SolverConfig::new(0.4, 3.0).unwrap();
        let e0 = crate::mesh::energy_ih(&m, 0.4, &crate::hyperbolic::BallPoint::ORIGIN).unwrap().i_h;
        let (m2, accepted, step) = descend_step(&m, &cfg).unwrap();
        assert!(accepted && step > 0.0);
        m2.validate().unwrap();
        let e1 = crate::mesh::energy_ih(&m2, 0.4, &crate::hyperbolic::BallPoint::ORIGIN).unwrap().i_h;
        assert!(e1 < e0);
    }

    #[test]
    fn catenoid_profile_and_threshold() {
        let s_b = 0.8;
        let (u_max, _) = catenoid::max_half_height(s_b);
        assert!(u_max > 0.1 && u_max < 2.0);
        let s_m = catenoid::neck_radius(s_b, 0.5 * u_max).unwrap();
        assert!(s_m < s_b && s_m > 0.0);
        assert!((catenoid::half_height(s_m, s_b) - 0.5 * u_max).abs() < 1e-6);
        assert!(catenoid::neck_radius(s_b, 1.01 * u_max).is_none());
    }
}
