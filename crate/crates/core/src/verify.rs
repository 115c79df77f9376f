//! Independent geometric checks of solved surfaces: discrete mean curvature,
//! hull containment, barrier sweeps, pairs, foliations and the graph property
//! near the ideal boundary.

use crate::error::{Error, Result};
use crate::exhaustion::{run_exhaustion, ExhaustionConfig};
use crate::hyperbolic::{euclidean_from_radius, IdealPoint};
use crate::math::{self, Mat3, Vec3, PI};
use crate::mesh::{point_mesh_distance, signed_point_mesh_distance, EnergyModel, Quadrature, TriMesh};
use crate::umbilic::{fibonacci_sphere, supporting_halfspaces, umbilic_cap, IdealCurve, RoundCircle, Side, UmbilicCap};
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// Outcome of one check. `pass` holds exactly when `violation ≤ tolerance`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub pass: bool,
    pub violation: f64,
    /// Where the worst violation happened (ball coordinates).
    pub location: Option<Vec3>,
    pub tolerance: f64,
    /// Identifiers of the inputs (run ids, file names).
    pub provenance: Vec<String>,
    /// Annotation: vacuous pass, inconclusive result, contact type.
    pub note: Option<String>,
}

impl CheckReport {
    pub fn new(name: &str, violation: f64, location: Option<Vec3>, tolerance: f64) -> Self {
        CheckReport {
            name: name.to_string(),
            pass: violation <= tolerance,
            violation,
            location,
            tolerance,
            provenance: Vec::new(),
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn with_provenance(mut self, id: impl Into<String>) -> Self {
        self.provenance.push(id.into());
        self
    }
}

/// Per-vertex discrete mean curvature `−(∇A·n) / (2 ∇V·n)` of the hyperbolic
/// area and volume, `n` the area-weighted vertex normal. An `I_H`-critical mesh
/// reports `H`; curvature is positive where the surface bends toward `n`.
/// Boundary vertices and vertices with a degenerate volume gradient are `None`.
pub fn discrete_mean_curvature(mesh: &TriMesh) -> Result<Vec<Option<f64>>> {
    let model = EnergyModel::adaptive(mesh, Quadrature::Order2);
    let (ga, gv) = model.gradients(mesh, Vec3::ZERO)?;
    let normals = mesh.vertex_normals();
    let boundary = mesh.boundary_mask();
    Ok((0..mesh.num_vertices())
        .map(|i| {
            let dv = gv[i].dot(normals[i]);
            if boundary[i] || !(dv.abs() > 1e-14 * gv[i].norm().max(1e-300)) {
                None
            } else {
                Some(-ga[i].dot(normals[i]) / (2.0 * dv))
            }
        })
        .collect())
}

/// Mean of the defined curvatures over the vertices within `hops` edges of `v`.
pub fn ring_mean_curvature(mesh: &TriMesh, curvature: &[Option<f64>], v: usize, hops: usize) -> Option<f64> {
    let nb = mesh.vertex_neighbors();
    let mut seen = vec![false; mesh.num_vertices()];
    let mut front = vec![v];
    seen[v] = true;
    let mut ring = vec![v];
    for _ in 0..hops {
        let mut next = Vec::new();
        for &a in &front {
            for &b in &nb[a] {
                if !seen[b] {
                    seen[b] = true;
                    next.push(b);
                }
            }
        }
        ring.extend(&next);
        front = next;
    }
    let vals: Vec<f64> = ring.iter().filter_map(|&i| curvature[i]).collect();
    if vals.is_empty() {
        None
    } else {
        Some(vals.iter().sum::<f64>() / vals.len() as f64)
    }
}

/// Every vertex in the sampled `CH_H(Γ)` (`n` supporting halfspaces), up to `tol`
/// in hyperbolic distance.
pub fn check_containment(mesh: &TriMesh, curve: &IdealCurve, h: f64, n: usize, tol: f64) -> Result<CheckReport> {
    if mesh.is_empty() {
        return Err(Error::InvalidInput("empty mesh".into()));
    }
    let hull = supporting_halfspaces(curve, h, n)?;
    let (worst, at) = mesh
        .vertices()
        .iter()
        .map(|&p| (hull.violation(p), p))
        .fold((0.0, None), |b, (v, p)| if v > b.0 { (v, Some(p)) } else { b });
    Ok(CheckReport::new("containment", worst, at, tol))
}

/// Vertices count as touching a barrier within this hyperbolic distance.
pub const CONTACT_TOL: f64 = 1e-3;

/// H'-caps over the circles of angular radius `ψ ∈ [psi_start, psi_end]` about
/// `axis`, oriented toward the axis. As `ψ` grows the caps sweep out the
/// region on their axis side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapSweep {
    pub axis: Vec3,
    pub h: f64,
    pub psi_start: f64,
    pub psi_end: f64,
}

impl CapSweep {
    pub fn cap(&self, psi: f64) -> Result<UmbilicCap> {
        umbilic_cap(RoundCircle::new(IdealPoint::from_direction(self.axis)?, psi)?, self.h, Side::Plus)
    }

    /// Deepest penetration of the mesh into the swept region at `psi`, and where.
    fn reach(&self, mesh: &TriMesh, psi: f64) -> Result<(f64, usize)> {
        let cap = self.cap(psi)?;
        Ok(mesh
            .vertices()
            .iter()
            .enumerate()
            .map(|(i, &p)| (cap.level(p), i))
            .fold((f64::NEG_INFINITY, 0), |b, x| if x.0 > b.0 { x } else { b }))
    }
}

/// Curvature margin of the default barrier sweeps.
pub const BARRIER_MARGIN: f64 = 0.2;

/// Barrier sweeps from both sides of `curve` for a surface asymptotic to it with
/// mean curvature `h` (oriented like the cap over a round circle with `σ = +`).
///
/// From `D⁺` an `H'`-cap family stays on its side of the surface when `H' ≤ h`,
/// from `D⁻` when `H' ≤ −h`; both use `H'` lowered by [`BARRIER_MARGIN`]. Each
/// axis is the ideal point of its side farthest from the curve.
pub fn barrier_sweeps(curve: &IdealCurve, h: f64) -> Result<[CapSweep; 2]> {
    let pool = fibonacci_sphere(2048);
    let sweep = |side: Side, hp: f64| -> Result<CapSweep> {
        let (axis, d) = pool
            .iter()
            .filter(|&&c| curve.side_of(c) == side)
            .map(|&c| (c, curve.distance_to(c)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or_else(|| Error::DegenerateInput("curve leaves no room on one side".into()))?;
        Ok(CapSweep { axis, h: hp.max(-0.95), psi_start: 0.25 * d, psi_end: PI - 0.05 })
    };
    Ok([sweep(Side::Plus, h - BARRIER_MARGIN)?, sweep(Side::Minus, -h - BARRIER_MARGIN)?])
}

/// Sweep the caps until they first touch the mesh and check the contact against
/// the comparison principle for a surface of nominal mean curvature `h_mesh`
/// (with respect to the mesh normals).
///
/// Boundary contact passes. At an interior contact the mesh lies on the side
/// `n_c` of the cap, which requires `H_mesh(n_c) ≥ H_cap(n_c)`; the violation is
/// the amount by which that fails.
pub fn check_maximum_principle(mesh: &TriMesh, sweep: &CapSweep, h_mesh: f64, tol: f64) -> Result<CheckReport> {
    let name = "maximum_principle";
    if !(0.0 < sweep.psi_start && sweep.psi_start < sweep.psi_end && sweep.psi_end < PI) {
        return Err(Error::InvalidParameter("sweep needs 0 < psi_start < psi_end < π".into()));
    }
    let (start, _) = sweep.reach(mesh, sweep.psi_start)?;
    if start >= -CONTACT_TOL {
        return Err(Error::InvalidInput("the mesh meets the first cap of the sweep".into()));
    }
    let (end, _) = sweep.reach(mesh, sweep.psi_end)?;
    if end < -CONTACT_TOL {
        return Ok(CheckReport::new(name, 0.0, None, tol).with_note("vacuous: no contact within the sweep"));
    }
    let (mut lo, mut hi) = (sweep.psi_start, sweep.psi_end);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if sweep.reach(mesh, mid)?.0 < -CONTACT_TOL {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let cap = sweep.cap(hi)?;
    let levels: Vec<f64> = mesh.vertices().iter().map(|&p| cap.level(p)).collect();
    let top = levels.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let boundary = mesh.boundary_mask();
    let touching: Vec<usize> = (0..levels.len()).filter(|&i| levels[i] >= top - CONTACT_TOL).collect();
    let v = touching.iter().copied().max_by(|&a, &b| levels[a].total_cmp(&levels[b])).unwrap();
    let p = mesh.vertices()[v];
    if touching.iter().any(|&i| boundary[i]) {
        return Ok(CheckReport::new(name, 0.0, Some(p), tol).with_note(format!("boundary contact at ψ = {hi:.6}")));
    }
    let n_c = -cap.unit_normal(p);
    let normal = mesh.vertex_normals()[v];
    let h_m = if normal.dot(n_c) >= 0.0 { h_mesh } else { -h_mesh };
    let h_c = -sweep.h;
    let measured = ring_mean_curvature(mesh, &discrete_mean_curvature(mesh)?, v, 2)
        .map(|k| if normal.dot(n_c) >= 0.0 { k } else { -k });
    Ok(CheckReport::new(name, (h_c - h_m).max(0.0), Some(p), tol).with_note(format!(
        "interior contact at ψ = {hi:.6}, vertex {v}: H_mesh {h_m:.4}, H_cap {h_c:.4}, 2-ring {measured:?}"
    )))
}

/// Result of [`pair_planes`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanePair {
    pub plus: TriMesh,
    pub minus: TriMesh,
    pub min_distance: f64,
    pub report: CheckReport,
}

fn final_disk(curve: &IdealCurve, h: f64, cfg: &ExhaustionConfig) -> Result<TriMesh> {
    let mut cfg = cfg.clone();
    cfg.solver.h = h;
    let stages = run_exhaustion(curve, &cfg)?;
    let last = stages.last().ok_or_else(|| Error::InvalidParameter("empty radius schedule".into()))?;
    if let Some(f) = &last.failure {
        return Err(Error::InvariantViolation(format!("H = {h}, stage {}: {f}", last.n)));
    }
    if stages.len() != cfg.radii.len() {
        return Err(Error::InvariantViolation(format!("H = {h}: exhaustion stopped at stage {}", last.n)));
    }
    last.disk.clone().ok_or_else(|| Error::InvariantViolation("final stage has no disk".into()))
}

/// Mean-curvature vector direction (2-ring measured curvature times normal).
fn curvature_vector(mesh: &TriMesh, k: &[Option<f64>], v: usize) -> Vec3 {
    mesh.vertex_normals()[v] * ring_mean_curvature(mesh, k, v, 2).unwrap_or(0.0)
}

/// The H-planes of `Γ` for `+H` and `−H`: both are solved by exhaustion, then
/// checked to be disjoint (minimum distance over the core `B_K` above
/// [`CONTACT_TOL`]) with mean-curvature vectors pointing toward each other at
/// the closest pair.
pub fn pair_planes(curve: &IdealCurve, h: f64, cfg: &ExhaustionConfig) -> Result<PlanePair> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::InvalidParameter(format!("pair_planes needs 0 < H < 1, got {h}")));
    }
    let plus = final_disk(curve, h, cfg)?;
    let minus = final_disk(curve, -h, cfg)?;
    let e = euclidean_from_radius(cfg.core_radius);
    let closest = |a: &TriMesh, b: &TriMesh| {
        let boundary = a.boundary_mask();
        a.vertices()
            .iter()
            .enumerate()
            .filter(|&(i, p)| !boundary[i] && p.norm() <= e)
            .map(|(i, &p)| (point_mesh_distance(p, b), i))
            .fold((f64::INFINITY, usize::MAX), |x, y| if y.0 < x.0 { y } else { x })
    };
    let (dp, ip) = closest(&plus, &minus);
    let (dm, im) = closest(&minus, &plus);
    if ip == usize::MAX || im == usize::MAX {
        return Err(Error::InvalidInput("no interior vertices inside the core".into()));
    }
    let d = dp.min(dm);
    // Facing test at each surface's closest vertex, toward the nearest vertex of the other.
    let (kp, km) = (discrete_mean_curvature(&plus)?, discrete_mean_curvature(&minus)?);
    let nearest = |m: &TriMesh, p: Vec3| {
        m.vertices().iter().copied().min_by(|a, b| (*a - p).norm2().total_cmp(&(*b - p).norm2())).unwrap()
    };
    let (pp, pm) = (plus.vertices()[ip], minus.vertices()[im]);
    let face_p = curvature_vector(&plus, &kp, ip).dot(nearest(&minus, pp) - pp);
    let face_m = curvature_vector(&minus, &km, im).dot(nearest(&plus, pm) - pm);
    let facing = face_p > 0.0 && face_m > 0.0;
    let violation = (CONTACT_TOL - d).max(0.0) + if facing { 0.0 } else { 1.0 };
    let report = CheckReport::new("pair_planes", violation, Some(if dp <= dm { pp } else { pm }), 0.0)
        .with_note(format!("min core distance {d:.6}; convex sides facing: {facing}"));
    Ok(PlanePair { plus, minus, min_distance: d, report })
}

/// Solve the H-plane of `Γ` for each `H` (sorted ascending) and check that the
/// surfaces are pairwise disjoint and consistently ordered: over the core,
/// surface `j > i` lies entirely on one side of surface `i`, the same side for
/// every pair. Violation: the largest distance found on the wrong side.
pub fn foliation_sweep(curve: &IdealCurve, hs: &[f64], cfg: &ExhaustionConfig) -> Result<(Vec<TriMesh>, CheckReport)> {
    if hs.iter().any(|h| !(h.abs() < 1.0)) {
        return Err(Error::InvalidParameter("foliation values must lie in (−1, 1)".into()));
    }
    if hs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("foliation values must be sorted ascending".into()));
    }
    let meshes: Vec<TriMesh> = hs.iter().map(|&h| final_disk(curve, h, cfg)).collect::<Result<_>>()?;
    if meshes.len() < 2 {
        return Ok((meshes, CheckReport::new("foliation", 0.0, None, 0.0).with_note("vacuous: fewer than two surfaces")));
    }
    let (report, _) = ordering_report(&meshes, cfg.core_radius);
    Ok((meshes, report))
}

/// Leaves closer than this count as touching.
pub const LEAF_SEPARATION: f64 = 1e-6;

/// Ordering test behind [`foliation_sweep`], on given surfaces (in order).
/// Returns the report and the common side (`±1`, 0 when undetermined).
///
/// Every core vertex of a later leaf must lie strictly on the side of each
/// earlier leaf that the first measured vertex picked; the violation is
/// `LEAF_SEPARATION` minus the smallest such signed distance (clamped at 0).
pub fn ordering_report(meshes: &[TriMesh], core_radius: f64) -> (CheckReport, f64) {
    let e = euclidean_from_radius(core_radius);
    let mut side = 0.0;
    let mut worst = (f64::INFINITY, None);
    for i in 0..meshes.len() {
        for j in i + 1..meshes.len() {
            let boundary = meshes[j].boundary_mask();
            for (v, &p) in meshes[j].vertices().iter().enumerate() {
                if boundary[v] || p.norm() > e {
                    continue;
                }
                let d = signed_point_mesh_distance(p, &meshes[i]);
                if side == 0.0 && d != 0.0 {
                    side = d.signum();
                }
                if d * side < worst.0 {
                    worst = (d * side, Some(p));
                }
            }
        }
    }
    if worst.1.is_none() {
        return (CheckReport::new("foliation", 0.0, None, 0.0).with_note("vacuous: no core vertices to compare"), side);
    }
    let report = CheckReport::new("foliation", (LEAF_SEPARATION - worst.0).max(0.0), worst.1, 0.0)
        .with_note(format!("minimum ordered separation {:.6}", worst.0));
    (report, side)
}

/// Bins of [`graph_near_infinity`]: arclength × height.
pub const GRAPH_BINS: (usize, usize) = (64, 16);

/// Whether the part of the mesh at upper-half-space height below `rho` is a
/// single-sheet graph over `Γ × (ρ_min, ρ)`.
///
/// The point at infinity is moved to the ideal point farthest from `Γ`. Each
/// collar vertex gets coordinates `(s, t)`: normalised arclength of the closest
/// point of `Γ` and height. Every bin centre must be covered by exactly one
/// projected triangle; `ρ_min` is the highest boundary vertex, below which the
/// truncated mesh cannot cover. The violation is the largest cover count minus one.
pub fn graph_near_infinity(mesh: &TriMesh, curve: &IdealCurve, rho: f64, bins: (usize, usize)) -> Result<CheckReport> {
    let name = "graph_near_infinity";
    let zeta = fibonacci_sphere(2048)
        .into_iter()
        .max_by(|a, b| curve.distance_to(*a).total_cmp(&curve.distance_to(*b)))
        .unwrap();
    let rot = Mat3::rotation_between(zeta, Vec3::Z);
    let uhs = |p: Vec3| {
        let q = rot * p;
        let w = (q - Vec3::Z).norm2();
        (2.0 * q.x / w, 2.0 * q.y / w, (1.0 - q.norm2()) / w)
    };
    let gamma: Vec<(f64, f64)> = curve.resample(4 * curve.len().max(256)).into_iter().map(|c| {
        let (x, y, _) = uhs(c);
        (x, y)
    }).collect();
    let m = gamma.len();
    let seg_len: Vec<f64> = (0..m).map(|i| {
        let (a, b) = (gamma[i], gamma[(i + 1) % m]);
        math::sqrt(sq(b.0 - a.0) + sq(b.1 - a.1))
    }).collect();
    let total: f64 = seg_len.iter().sum();
    let starts: Vec<f64> = seg_len.iter().scan(0.0, |acc, &l| { let s = *acc; *acc += l; Some(s) }).collect();
    let param = |x: f64, y: f64| -> f64 {
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..m {
            let (a, b) = (gamma[i], gamma[(i + 1) % m]);
            let (dx, dy) = (b.0 - a.0, b.1 - a.1);
            let l2 = dx * dx + dy * dy;
            let f = if l2 > 0.0 { (((x - a.0) * dx + (y - a.1) * dy) / l2).clamp(0.0, 1.0) } else { 0.0 };
            let (px, py) = (a.0 + f * dx, a.1 + f * dy);
            let d2 = sq(x - px) + sq(y - py);
            if d2 < best.0 {
                best = (d2, (starts[i] + f * seg_len[i]) / total);
            }
        }
        best.1
    };
    let coords: Vec<(f64, f64)> = mesh.vertices().iter().map(|&p| {
        let (x, y, t) = uhs(p);
        (param(x, y), t)
    }).collect();
    let boundary = mesh.boundary_mask();
    let rho_min = (0..coords.len()).filter(|&i| boundary[i]).map(|i| coords[i].1).fold(0.0, f64::max);
    if !(rho_min < rho) {
        return Err(Error::InvalidInput(format!("collar is empty: boundary reaches height {rho_min:.4} ≥ ρ = {rho}")));
    }
    let (ns, nt) = bins;
    let mut count = vec![0usize; ns * nt];
    for t in mesh.triangles() {
        let c = t.map(|v| coords[v]);
        if c.iter().all(|q| q.1 >= rho) {
            continue;
        }
        // Unwrap the arclength parameter relative to the first corner.
        let s0 = c[0].0;
        let s: [f64; 3] = c.map(|q| s0 + (q.0 - s0) - math::round(q.0 - s0));
        let (smin, smax) = (s[0].min(s[1]).min(s[2]), s[0].max(s[1]).max(s[2]));
        for bi in 0..ns {
            for shift in [-1.0, 0.0, 1.0] {
                let sc = (bi as f64 + 0.5) / ns as f64 + shift;
                if sc < smin || sc > smax {
                    continue;
                }
                for bj in 0..nt {
                    let tc = rho_min + (rho - rho_min) * (bj as f64 + 0.5) / nt as f64;
                    if in_triangle((sc, tc), (s[0], c[0].1), (s[1], c[1].1), (s[2], c[2].1)) {
                        count[bi * nt + bj] += 1;
                    }
                }
            }
        }
    }
    let worst = (0..count.len()).max_by_key(|&k| count[k]).unwrap();
    let empty = count.iter().filter(|&&c| c == 0).count();
    let violation = count[worst].saturating_sub(1) as f64;
    let location = {
        let (bi, bj) = (worst / nt, worst % nt);
        Some(Vec3::new((bi as f64 + 0.5) / ns as f64, rho_min + (rho - rho_min) * (bj as f64 + 0.5) / nt as f64, 0.0))
    };
    let mut report = CheckReport::new(name, violation, if violation > 0.0 { location } else { None }, 0.0);
    report.note = Some(if empty > 0 {
        format!("inconclusive: {empty} of {} bins uncovered (collar too coarse); heights ({rho_min:.4e}, {rho})", ns * nt)
    } else {
        format!("heights ({rho_min:.4e}, {rho}); max cover {}", count[worst])
    });
    if empty > 0 && violation == 0.0 {
        report.pass = false;
    }
    Ok(report)
}

fn sq(x: f64) -> f64 {
    x * x
}

fn in_triangle(p: (f64, f64), a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> bool {
    let cross = |o: (f64, f64), u: (f64, f64), v: (f64, f64)| (u.0 - o.0) * (v.1 - o.1) - (u.1 - o.1) * (v.0 - o.0);
    let (d1, d2, d3) = (cross(a, b, p), cross(b, c, p), cross(c, a, p));
    let neg = d1 < 0.0 || d2 < 0.0 || d3 < 0.0;
    let pos = d1 > 0.0 || d2 > 0.0 || d3 > 0.0;
    !(neg && pos)
}

/// Deliberately defective meshes for negative controls.
/// Triangle–triangle self-intersection test. Pairs sharing a vertex are not
/// compared; the violation is the number of intersecting pairs.
pub fn check_embedded(mesh: &TriMesh) -> CheckReport {
    let vs = mesh.vertices();
    let tris = mesh.triangles();
    let edges = mesh.edges();
    if tris.is_empty() {
        return CheckReport::new("embedded", 0.0, None, 0.0).with_note("vacuous: empty mesh");
    }
    let mean_edge = edges.iter().map(|&(a, b)| (vs[a] - vs[b]).norm()).sum::<f64>() / edges.len() as f64;
    let cell = 2.0 * mean_edge.max(1e-12);
    let key = |x: f64| math::floor(x / cell) as i64;
    let mut grid: BTreeMap<(i64, i64, i64), Vec<usize>> = BTreeMap::new();
    let bbox = |t: &[usize; 3]| {
        let mut lo = vs[t[0]];
        let mut hi = vs[t[0]];
        for &i in &t[1..] {
            for k in 0..3 {
                lo[k] = lo[k].min(vs[i][k]);
                hi[k] = hi[k].max(vs[i][k]);
            }
        }
        (lo, hi)
    };
    for (ti, t) in tris.iter().enumerate() {
        let (lo, hi) = bbox(t);
        for x in key(lo.x)..=key(hi.x) {
            for y in key(lo.y)..=key(hi.y) {
                for z in key(lo.z)..=key(hi.z) {
                    grid.entry((x, y, z)).or_default().push(ti);
                }
            }
        }
    }
    let mut hits = 0usize;
    let mut location = None;
    let mut seen = BTreeSet::new();
    for cellmates in grid.values() {
        for (a, &ta) in cellmates.iter().enumerate() {
            for &tb in &cellmates[a + 1..] {
                let (p, q) = (tris[ta], tris[tb]);
                if p.iter().any(|i| q.contains(i)) || !seen.insert((ta.min(tb), ta.max(tb))) {
                    continue;
                }
                if let Some(x) = triangles_intersect([vs[p[0]], vs[p[1]], vs[p[2]]], [vs[q[0]], vs[q[1]], vs[q[2]]]) {
                    hits += 1;
                    location.get_or_insert(x);
                }
            }
        }
    }
    CheckReport::new("embedded", hits as f64, location, 0.0)
}

fn triangles_intersect(a: [Vec3; 3], b: [Vec3; 3]) -> Option<Vec3> {
    for (s, t) in [(a, b), (b, a)] {
        for k in 0..3 {
            if let Some(x) = segment_hits_triangle(s[k], s[(k + 1) % 3], t) {
                return Some(x);
            }
        }
    }
    None
}

/// Möller–Trumbore restricted to the segment `p0 p1`. Segments parallel to
/// the triangle's plane (coplanar overlaps included) never count.
fn segment_hits_triangle(p0: Vec3, p1: Vec3, t: [Vec3; 3]) -> Option<Vec3> {
    let d = p1 - p0;
    let (e1, e2) = (t[1] - t[0], t[2] - t[0]);
    let pv = d.cross(e2);
    let det = e1.dot(pv);
    if det.abs() <= 1e-10 * d.norm() * e1.norm() * e2.norm() {
        return None;
    }
    let s = p0 - t[0];
    let u = s.dot(pv) / det;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let qv = s.cross(e1);
    let v = d.dot(qv) / det;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let w = e2.dot(qv) / det;
    (0.0..=1.0).contains(&w).then(|| p0 + d * w)
}

pub mod fixtures {
    use crate::error::{Error, Result};
    use crate::hyperbolic::{distance_vec, euclidean_from_radius, geodesic_lerp};
    use crate::math::{self, Vec3, PI};
    use crate::mesh::{ring_disk, RingSchedule, TriMesh};
    use crate::umbilic::UmbilicCap;
    use alloc::vec::Vec;

    /// Push the interior vertices within hyperbolic distance `radius` of `center`
    /// toward the ideal point `toward`, by up to `height` (smooth bump profile).
    pub fn dented(mesh: &TriMesh, center: Vec3, radius: f64, height: f64, toward: Vec3) -> Result<TriMesh> {
        let far = toward.normalized() * euclidean_from_radius(30.0);
        let boundary = mesh.boundary_mask();
        let moved: Vec<Vec3> = mesh
            .vertices()
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let d = distance_vec(p, center);
                if boundary[i] || d >= radius {
                    return p;
                }
                let c = math::cos(0.5 * PI * d / radius);
                geodesic_lerp(p, far, height * c * c / distance_vec(p, far))
            })
            .collect();
        if moved == mesh.vertices() {
            return Err(Error::InvalidParameter("dent radius covers no interior vertex".into()));
        }
        mesh.with_positions(moved)
    }

    /// Exact cap over the foot disk of radius `rho`, with a Z-shaped fold of the
    /// collar `[rho − 1.5, rho − 0.5]` over a quarter-turn sector: there the foot
    /// radius runs forward, back and forward again while the surface steps off
    /// the cap by up to `offset`, so three separated sheets lie over the same
    /// region near infinity.
    pub fn folded_cap(cap: &UmbilicCap, rho: f64, h0: f64, offset: f64) -> Result<TriMesh> {
        if !(rho > 2.0) {
            return Err(Error::InvalidParameter("folded cap needs foot radius > 2".into()));
        }
        let (r1, r2) = (rho - 1.5, rho - 0.5);
        let sched = RingSchedule::graded(rho, &[r1, r2], h0, usize::MAX / 8, 0.35)?;
        // The equidistant surface `level` further along: same circle, shifted offset.
        let at_level = |x: f64, y: f64, level: f64| {
            let s = cap.offset() + level;
            UmbilicCap { h: -cap.sigma.sign() * math::tanh(s), ..*cap }.point_from_foot(x, y)
        };
        ring_disk(&sched, |r, u| {
            // Sector weight: smooth bump over u ∈ [0, 1/4].
            let w = if u < 0.25 { math::sin(4.0 * PI * u) * math::sin(4.0 * PI * u) } else { 0.0 };
            let tau = ((r - r1) / (r2 - r1)).clamp(0.0, 1.0);
            let foot = if r > r1 && r < r2 { r1 + (r2 - r1) * (tau + 0.4 * w * math::sin(2.0 * PI * tau)) } else { r };
            let smooth = tau * tau * (3.0 - 2.0 * tau);
            let e = euclidean_from_radius(foot);
            let (x, y) = (e * math::cos(2.0 * PI * u), e * math::sin(2.0 * PI * u));
            at_level(x, y, offset * w * smooth)
        })
    }
}
