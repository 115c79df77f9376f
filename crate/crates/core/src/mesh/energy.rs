//! Hyperbolic area, enclosed volume and the functional `I_H = A + 2HV`.
//!
//! Both integrals are evaluated over the flat Euclidean triangles of the mesh:
//! the area with integrand `λ²`, the volume through the divergence theorem with
//! the radial field `Φ(x) = g(|x|²) x`, `div Φ = λ³`. The region is closed by
//! the cone from `O` over the boundary loops, so the volume equals the sum of
//! the signed cones from `O` over the triangles; interior cone faces cancel.
//!
//! Per-triangle subdivision depths are chosen once from the vertex positions
//! and then frozen inside an [`EnergyModel`], so that the discrete energy is a
//! smooth function of the coordinates and its gradient is exact.

use super::TriMesh;
use crate::error::{Error, Result};
use crate::hyperbolic::BallPoint;
use crate::math::{self, Vec3};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// Symmetric triangle quadrature rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quadrature {
    /// Centroid rule, exact for degree 1.
    Order1,
    /// Three interior points, exact for degree 2.
    Order2,
    /// Six-point rule, exact for degree 4.
    Order4,
}

impl Quadrature {
    pub fn from_order(order: u32) -> Result<Self> {
        match order {
            1 => Ok(Quadrature::Order1),
            2 => Ok(Quadrature::Order2),
            3 | 4 => Ok(Quadrature::Order4),
            _ => Err(Error::InvalidParameter(format!("unsupported quadrature order {order}"))),
        }
    }

    fn points(self) -> Vec<([f64; 3], f64)> {
        match self {
            Quadrature::Order1 => vec![([1.0 / 3.0; 3], 1.0)],
            Quadrature::Order2 => {
                let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
                vec![([a, b, b], 1.0 / 3.0), ([b, a, b], 1.0 / 3.0), ([b, b, a], 1.0 / 3.0)]
            }
            Quadrature::Order4 => {
                let (a, wa) = (0.445_948_490_915_965, 0.223_381_589_678_011);
                let (b, wb) = (0.091_576_213_509_771, 0.109_951_743_655_322);
                let (ca, cb) = (1.0 - 2.0 * a, 1.0 - 2.0 * b);
                vec![
                    ([a, a, ca], wa),
                    ([a, ca, a], wa),
                    ([ca, a, a], wa),
                    ([b, b, cb], wb),
                    ([b, cb, b], wb),
                    ([cb, b, b], wb),
                ]
            }
        }
    }
}

/// Deepest per-triangle subdivision.
pub const MAX_DEPTH: u8 = 5;
/// Relative conformal-factor variation that triggers subdivision.
const LAMBDA_VARIATION: f64 = 0.1;
/// Elements reaching past this Euclidean radius are always subdivided.
const NEAR_BOUNDARY: f64 = 0.995;

/// Quadrature nodes (barycentric coordinates and weights summing to 1) for a
/// triangle uniformly subdivided `depth` times.
fn subdivided_rule(rule: Quadrature, depth: u8) -> Vec<([f64; 3], f64)> {
    let base = rule.points();
    let mut tris = vec![[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(tris.len() * 4);
        for t in tris {
            let mid = |i: usize, j: usize| -> [f64; 3] {
                [0.5 * (t[i][0] + t[j][0]), 0.5 * (t[i][1] + t[j][1]), 0.5 * (t[i][2] + t[j][2])]
            };
            let (m01, m12, m20) = (mid(0, 1), mid(1, 2), mid(2, 0));
            next.push([t[0], m01, m20]);
            next.push([m01, t[1], m12]);
            next.push([m20, m12, t[2]]);
            next.push([m01, m12, m20]);
        }
        tris = next;
    }
    let scale = 1.0 / tris.len() as f64;
    let mut out = Vec::with_capacity(tris.len() * base.len());
    for t in &tris {
        for (b, w) in &base {
            let mut p = [0.0; 3];
            for k in 0..3 {
                p[k] = b[0] * t[0][k] + b[1] * t[1][k] + b[2] * t[2][k];
            }
            out.push((p, w * scale));
        }
    }
    out
}

/// `g(q)` and `g'(q)` with `Φ(x) = g(|x|²) x` and `div Φ = λ³ = 8 / (1 − q)³`.
///
/// `r³ g(r²) = ∫₀ʳ 8t² / (1 − t²)³ dt = r(1 + r²)/(1 − r²)² − artanh r`.
pub fn radial_flux_potential(q: f64) -> (f64, f64) {
    if q < 0.25 {
        // g = Σ 8 C(k+2, 2) q^k / (2k + 3)
        let (mut g, mut dg) = (0.0, 0.0);
        let mut qk = 1.0;
        let mut qk1 = 0.0;
        for k in 0..64 {
            let kf = k as f64;
            let c = 8.0 * (kf + 1.0) * (kf + 2.0) / 2.0 / (2.0 * kf + 3.0);
            g += c * qk;
            if k > 0 {
                dg += c * kf * qk1;
            }
            qk1 = qk;
            qk *= q;
            if qk < 1e-18 {
                break;
            }
        }
        (g, dg)
    } else {
        let r = math::sqrt(q);
        let s = 1.0 - q;
        let big = r * (1.0 + q) / (s * s) - math::atanh(r);
        let g = big / (q * r);
        let dg = (8.0 / (s * s * s) - 3.0 * g) / (2.0 * q);
        (g, dg)
    }
}

/// Hyperbolic energies of one mesh with frozen per-triangle subdivision depths.
#[derive(Clone, Debug)]
pub struct EnergyModel {
    rule: Quadrature,
    depths: Vec<u8>,
    tables: Vec<Vec<([f64; 3], f64)>>,
    cone_depth: u8,
}

/// Energies and gradient size of a mesh.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub area: f64,
    pub volume: f64,
    pub h: f64,
    pub i_h: f64,
    pub gradient_sup_norm: f64,
    /// Per-triangle difference between the chosen rule and the centroid rule
    /// on the same subdivision (an a-posteriori error indicator for the area term).
    pub quadrature_error: Vec<f64>,
}

fn adaptive_depth(vs: [Vec3; 3]) -> u8 {
    let lam: [f64; 3] = vs.map(|v| 2.0 / (1.0 - v.norm2()));
    let (lo, hi) = (lam[0].min(lam[1]).min(lam[2]), lam[0].max(lam[1]).max(lam[2]));
    let var = hi / lo - 1.0;
    let mut d = 0u8;
    let mut v = var;
    while v > LAMBDA_VARIATION && d < MAX_DEPTH {
        v *= 0.5;
        d += 1;
    }
    if vs.iter().any(|p| p.norm() > NEAR_BOUNDARY) {
        d = d.max(2);
    }
    d.min(MAX_DEPTH)
}

impl EnergyModel {
    /// Depths chosen from the conformal-factor variation over each element.
    pub fn adaptive(mesh: &TriMesh, rule: Quadrature) -> Self {
        let depths = mesh
            .triangles()
            .iter()
            .map(|t| adaptive_depth([mesh.vertices()[t[0]], mesh.vertices()[t[1]], mesh.vertices()[t[2]]]))
            .collect();
        Self::with_depths(rule, depths)
    }

    /// The same depth on every triangle.
    pub fn uniform(mesh: &TriMesh, rule: Quadrature, depth: u8) -> Self {
        Self::with_depths(rule, vec![depth.min(MAX_DEPTH); mesh.num_triangles()])
    }

    fn with_depths(rule: Quadrature, depths: Vec<u8>) -> Self {
        let tables = (0..=MAX_DEPTH).map(|d| subdivided_rule(rule, d)).collect();
        EnergyModel { rule, depths, tables, cone_depth: 3 }
    }

    pub fn rule(&self) -> Quadrature {
        self.rule
    }

    pub fn depths(&self) -> &[u8] {
        &self.depths
    }

    fn check(&self, mesh: &TriMesh) -> Result<()> {
        if self.depths.len() != mesh.num_triangles() {
            return Err(Error::InvalidInput(format!(
                "energy model built for {} triangles, mesh has {}",
                self.depths.len(),
                mesh.num_triangles()
            )));
        }
        Ok(())
    }

    /// `(area, flux)` of triangle `t`.
    pub fn triangle_terms(&self, mesh: &TriMesh, t: usize) -> (f64, f64) {
        let [a, b, c] = mesh.triangles()[t];
        let v = mesh.vertices();
        self.terms(v[a], v[b], v[c], self.depths[t], true)
    }

    fn terms(&self, v0: Vec3, v1: Vec3, v2: Vec3, depth: u8, with_area: bool) -> (f64, f64) {
        let n = (v1 - v0).cross(v2 - v0) * 0.5;
        let (mut sa, mut sf) = (0.0, Vec3::ZERO);
        for (b, w) in &self.tables[depth as usize] {
            let x = v0 * b[0] + v1 * b[1] + v2 * b[2];
            let q = x.norm2();
            if with_area {
                let lam = 2.0 / (1.0 - q);
                sa += w * lam * lam;
            }
            sf += x * (w * radial_flux_potential(q).0);
        }
        (sa * n.norm(), sf.dot(n))
    }

    fn cone_flux(&self, o: Vec3, a: Vec3, b: Vec3) -> f64 {
        // Cone face (O, b, a) closing the boundary half-edge a → b.
        self.terms(o, b, a, self.cone_depth, false).1
    }

    /// Hyperbolic area.
    pub fn area(&self, mesh: &TriMesh) -> Result<f64> {
        self.check(mesh)?;
        Ok((0..mesh.num_triangles()).map(|t| self.triangle_terms(mesh, t).0).sum())
    }

    /// Signed hyperbolic volume enclosed between the mesh and the cone from `o`.
    pub fn volume(&self, mesh: &TriMesh, o: Vec3) -> Result<f64> {
        self.check(mesh)?;
        let mut v: f64 = (0..mesh.num_triangles()).map(|t| self.triangle_terms(mesh, t).1).sum();
        v += self.cone_total(mesh, o);
        Ok(v)
    }

    fn cone_total(&self, mesh: &TriMesh, o: Vec3) -> f64 {
        let vs = mesh.vertices();
        let mut v = 0.0;
        for l in mesh.boundary_loops() {
            for k in 0..l.len() {
                v += self.cone_flux(o, vs[l[k]], vs[l[(k + 1) % l.len()]]);
            }
        }
        v
    }

    /// `(area, volume)`.
    pub fn area_volume(&self, mesh: &TriMesh, o: Vec3) -> Result<(f64, f64)> {
        self.check(mesh)?;
        let (mut a, mut v) = (0.0, 0.0);
        for t in 0..mesh.num_triangles() {
            let (ta, tv) = self.triangle_terms(mesh, t);
            a += ta;
            v += tv;
        }
        Ok((a, v + self.cone_total(mesh, o)))
    }

    /// `I_H = area + 2 H volume`.
    pub fn energy(&self, mesh: &TriMesh, h: f64, o: Vec3) -> Result<f64> {
        let (a, v) = self.area_volume(mesh, o)?;
        Ok(a + 2.0 * h * v)
    }

    /// Part of `I_H` that depends on vertex `i`: its incident triangles and cone faces.
    pub fn local_energy(&self, mesh: &TriMesh, incident: &[usize], i: usize, h: f64, o: Vec3) -> f64 {
        let mut e = 0.0;
        for &t in incident {
            let (a, f) = self.triangle_terms(mesh, t);
            e += a + 2.0 * h * f;
        }
        let vs = mesh.vertices();
        for l in mesh.boundary_loops() {
            for k in 0..l.len() {
                let (a, b) = (l[k], l[(k + 1) % l.len()]);
                if a == i || b == i {
                    e += 2.0 * h * self.cone_flux(o, vs[a], vs[b]);
                }
            }
        }
        e
    }

    /// Exact gradients `(∇A, ∇V)` with respect to the Euclidean vertex coordinates.
    pub fn gradients(&self, mesh: &TriMesh, o: Vec3) -> Result<(Vec<Vec3>, Vec<Vec3>)> {
        self.check(mesh)?;
        let vs = mesh.vertices();
        let mut ga = vec![Vec3::ZERO; vs.len()];
        let mut gv = vec![Vec3::ZERO; vs.len()];
        for (ti, t) in mesh.triangles().iter().enumerate() {
            let p = [vs[t[0]], vs[t[1]], vs[t[2]]];
            let (da, dv, _, _) = self.triangle_gradient(p, self.depths[ti], true);
            for k in 0..3 {
                ga[t[k]] += da[k];
                gv[t[k]] += dv[k];
            }
        }
        for l in mesh.boundary_loops() {
            for k in 0..l.len() {
                let (a, b) = (l[k], l[(k + 1) % l.len()]);
                let (_, dv, _, _) = self.triangle_gradient([o, vs[b], vs[a]], self.cone_depth, false);
                gv[b] += dv[1];
                gv[a] += dv[2];
            }
        }
        Ok((ga, gv))
    }

    /// Per-triangle `(∇A, ∇V, A, V)`.
    fn triangle_gradient(&self, p: [Vec3; 3], depth: u8, with_area: bool) -> ([Vec3; 3], [Vec3; 3], f64, f64) {
        let n = (p[1] - p[0]).cross(p[2] - p[0]) * 0.5;
        let nn = n.norm();
        let nhat = if nn > 0.0 { n / nn } else { Vec3::ZERO };
        let mut da = [Vec3::ZERO; 3];
        let mut dv = [Vec3::ZERO; 3];
        let mut sa = 0.0;
        let mut sphi = Vec3::ZERO;
        for (b, w) in &self.tables[depth as usize] {
            let x = p[0] * b[0] + p[1] * b[1] + p[2] * b[2];
            let q = x.norm2();
            let (g, dg) = radial_flux_potential(q);
            sphi += x * (w * g);
            // (DΦ)ᵀ n = g n + 2 g' (x·n) x
            let dphi_n = n * g + x * (2.0 * dg * x.dot(n));
            if with_area {
                let lam = 2.0 / (1.0 - q);
                sa += w * lam * lam;
                // ∇λ² = 2 λ³ x
                let grad_f = x * (2.0 * lam * lam * lam * w * nn);
                for k in 0..3 {
                    da[k] += grad_f * b[k];
                }
            }
            for k in 0..3 {
                dv[k] += dphi_n * (w * b[k]);
            }
        }
        for k in 0..3 {
            let (j, l) = ((k + 1) % 3, (k + 2) % 3);
            let e = p[j] - p[l];
            if with_area {
                da[k] += e.cross(nhat) * (0.5 * sa);
            }
            dv[k] += e.cross(sphi) * 0.5;
        }
        (da, dv, sa * nn, sphi.dot(n))
    }

    /// `(I_H, ∇I_H)` in one pass.
    pub fn value_and_gradient(&self, mesh: &TriMesh, h: f64, o: Vec3) -> Result<(f64, Vec<Vec3>)> {
        self.check(mesh)?;
        let vs = mesh.vertices();
        let mut g = vec![Vec3::ZERO; vs.len()];
        let (mut area, mut vol) = (0.0, 0.0);
        let h2 = 2.0 * h;
        for (ti, t) in mesh.triangles().iter().enumerate() {
            let p = [vs[t[0]], vs[t[1]], vs[t[2]]];
            let (da, dv, a, v) = self.triangle_gradient(p, self.depths[ti], true);
            area += a;
            vol += v;
            for k in 0..3 {
                g[t[k]] += da[k] + dv[k] * h2;
            }
        }
        for l in mesh.boundary_loops() {
            for k in 0..l.len() {
                let (a, b) = (l[k], l[(k + 1) % l.len()]);
                let (_, dv, _, v) = self.triangle_gradient([o, vs[b], vs[a]], self.cone_depth, false);
                vol += v;
                g[b] += dv[1] * h2;
                g[a] += dv[2] * h2;
            }
        }
        Ok((area + h2 * vol, g))
    }

    /// Exact gradient of `I_H`.
    pub fn gradient(&self, mesh: &TriMesh, h: f64, o: Vec3) -> Result<Vec<Vec3>> {
        let (ga, gv) = self.gradients(mesh, o)?;
        Ok(ga.into_iter().zip(gv).map(|(a, v)| a + v * (2.0 * h)).collect())
    }

    fn quadrature_errors(&self, mesh: &TriMesh) -> Vec<f64> {
        let coarse = EnergyModel {
            rule: Quadrature::Order1,
            depths: self.depths.clone(),
            tables: (0..=MAX_DEPTH).map(|d| subdivided_rule(Quadrature::Order1, d)).collect(),
            cone_depth: self.cone_depth,
        };
        (0..mesh.num_triangles())
            .map(|t| (self.triangle_terms(mesh, t).0 - coarse.triangle_terms(mesh, t).0).abs())
            .collect()
    }
}

fn check_o(o: &BallPoint) -> Result<Vec3> {
    let v = o.coords();
    if v.norm2() >= 1.0 {
        return Err(Error::InvalidParameter("reference point outside the ball".into()));
    }
    Ok(v)
}

/// Hyperbolic area with adaptive subdivision.
pub fn hyperbolic_area(mesh: &TriMesh, quadrature: Quadrature) -> Result<f64> {
    if mesh.is_empty() {
        return Ok(0.0);
    }
    EnergyModel::adaptive(mesh, quadrature).area(mesh)
}

/// Signed hyperbolic volume of the cones from `o` over the triangles.
pub fn enclosed_volume(mesh: &TriMesh, o: &BallPoint) -> Result<f64> {
    let o = check_o(o)?;
    if mesh.is_empty() {
        return Ok(0.0);
    }
    EnergyModel::adaptive(mesh, Quadrature::Order2).volume(mesh, o)
}

/// Full energy report for `I_H`.
pub fn energy_ih(mesh: &TriMesh, h: f64, o: &BallPoint) -> Result<EnergyReport> {
    if !(h.abs() < 1.0) {
        return Err(Error::InvalidParameter(format!("|H| must be < 1, got {h}")));
    }
    let ov = check_o(o)?;
    let model = EnergyModel::adaptive(mesh, Quadrature::Order2);
    let (area, volume) = model.area_volume(mesh, ov)?;
    let g = model.gradient(mesh, h, ov)?;
    let fixed = mesh.boundary_mask();
    let gradient_sup_norm = hyperbolic_sup_norm(mesh.vertices(), &g, &fixed);
    Ok(EnergyReport {
        area,
        volume,
        h,
        i_h: area + 2.0 * h * volume,
        gradient_sup_norm,
        quadrature_error: model.quadrature_errors(mesh),
    })
}

/// Largest hyperbolic norm `|g|/λ` of a gradient over the free vertices.
///
/// `|g|/λ` is the rate of change of the energy per unit hyperbolic displacement,
/// so it does not depend on where in the ball a vertex sits.
pub fn hyperbolic_sup_norm(vertices: &[Vec3], g: &[Vec3], fixed: &[bool]) -> f64 {
    vertices
        .iter()
        .zip(g)
        .zip(fixed)
        .filter(|(_, &f)| !f)
        .map(|((p, v), _)| v.norm() * 0.5 * (1.0 - p.norm2()))
        .fold(0.0, f64::max)
}

/// Exact gradient of the discrete `I_H`, one vector per vertex (boundary
/// vertices included; they are held fixed by the solver).
pub fn gradient_ih(mesh: &TriMesh, h: f64, o: &BallPoint) -> Result<Vec<Vec3>> {
    let ov = check_o(o)?;
    EnergyModel::adaptive(mesh, Quadrature::Order2).gradient(mesh, h, ov)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{exact_cap_mesh, flat_disk, geodesic_sphere};
    use crate::math::{Mat3, PI};
    use crate::umbilic::{umbilic_cap, RoundCircle, Side};

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn flux_potential_has_divergence_lambda_cubed() {
        for &q in &[0.0, 1e-6, 0.01, 0.2, 0.2499999, 0.25, 0.5, 0.9, 0.99] {
            let (g, dg) = radial_flux_potential(q);
            let lhs = 3.0 * g + 2.0 * q * dg;
            let rhs = 8.0 / ((1.0 - q) * (1.0 - q) * (1.0 - q));
            assert!(rel(lhs, rhs) < 1e-9, "q {q}: {lhs} vs {rhs}");
        }
        // The two branches agree at the switch point.
        let (a, da) = radial_flux_potential(0.25 - 1e-13);
        let (b, db) = radial_flux_potential(0.25);
        assert!(rel(a, b) < 1e-11 && rel(da, db) < 1e-8);
    }

    #[test]
    fn closed_form_area_and_volume() {
        let disk = flat_disk(1.0, 0.05).unwrap();
        let a = hyperbolic_area(&disk, Quadrature::Order2).unwrap();
        assert!(rel(a, 2.0 * PI * (math::cosh(1.0) - 1.0)) < 0.01, "{a}");
        let s = geodesic_sphere(1.0, 5, true).unwrap();
        let a = hyperbolic_area(&s, Quadrature::Order2).unwrap();
        assert!(rel(a, 4.0 * PI * math::sinh(1.0) * math::sinh(1.0)) < 0.01, "{a}");
        let v = enclosed_volume(&s, &BallPoint::ORIGIN).unwrap();
        assert!(rel(v, PI * (math::sinh(2.0) - 2.0)) < 0.01, "{v}");
        let vr = enclosed_volume(&s.reversed(), &BallPoint::ORIGIN).unwrap();
        assert_eq!(vr, -v);
        // Closed surfaces: independent of the reference point.
        let o = BallPoint::new(0.2, -0.1, 0.3).unwrap();
        assert!((enclosed_volume(&s, &o).unwrap() - v).abs() < 1e-9);
        let r = energy_ih(&s, 0.5, &BallPoint::ORIGIN).unwrap();
        assert!(rel(r.i_h, 17.3559 + 5.1119) < 0.01);
        assert_eq!(r.i_h, r.area + 2.0 * 0.5 * r.volume);
        assert_eq!(hyperbolic_area(&TriMesh::empty(), Quadrature::Order2).unwrap(), 0.0);
    }

    #[test]
    fn flat_disk_through_reference_point_has_no_volume() {
        let disk = flat_disk(1.5, 0.2).unwrap();
        assert!(enclosed_volume(&disk, &BallPoint::ORIGIN).unwrap().abs() < 1e-14);
        let o = BallPoint::new(0.3, -0.2, 0.0).unwrap();
        assert!(enclosed_volume(&disk, &o).unwrap().abs() < 1e-6);
        assert!(enclosed_volume(&disk, &BallPoint::with_guard(Vec3::new(1.0, 0.0, 0.0), 0.0).unwrap_or(BallPoint::ORIGIN)).is_ok());
    }

    #[test]
    fn quadrature_converges_at_second_order() {
        // Exact spherical geometry, so only quadrature and chord errors remain.
        let exact = 4.0 * PI * math::sinh(1.0) * math::sinh(1.0);
        let errs: Vec<f64> = (2..5)
            .map(|l| {
                let s = geodesic_sphere(1.0, l, true).unwrap();
                (EnergyModel::uniform(&s, Quadrature::Order2, 0).area(&s).unwrap() - exact).abs()
            })
            .collect();
        for w in errs.windows(2) {
            assert!(math::ln(w[0] / w[1]) / math::ln(2.0) > 1.8, "{errs:?}");
        }
    }

    fn perturbed_cap() -> TriMesh {
        let cap = umbilic_cap(RoundCircle::equator(), 0.4, Side::Plus).unwrap();
        let m = exact_cap_mesh(&cap, 1.5, 0.3).unwrap();
        let mut rng = crate::math::SplitMix64::new(11);
        let fixed = m.boundary_mask();
        let v = m
            .vertices()
            .iter()
            .zip(&fixed)
            .map(|(p, &f)| {
                if f {
                    *p
                } else {
                    *p + Vec3::new(rng.next_f64() - 0.5, rng.next_f64() - 0.5, rng.next_f64() - 0.5) * 0.01
                }
            })
            .collect();
        m.with_positions(v).unwrap()
    }

    #[test]
    fn gradient_matches_central_differences() {
        let m = perturbed_cap();
        let o = Vec3::new(0.05, 0.0, -0.1);
        let h = 0.4;
        let model = EnergyModel::adaptive(&m, Quadrature::Order2);
        let g = model.gradient(&m, h, o).unwrap();
        let vt = m.vertex_triangles();
        let mut pos = m.vertices().to_vec();
        for i in (0..m.num_vertices()).step_by(7) {
            for k in 0..3 {
                let step = 1e-6 * (1.0 - pos[i].norm2());
                let base = pos[i][k];
                pos[i][k] = base + step;
                let ep = model.local_energy(&m.with_positions_unchecked(pos.clone()), &vt[i], i, h, o);
                pos[i][k] = base - step;
                let em = model.local_energy(&m.with_positions_unchecked(pos.clone()), &vt[i], i, h, o);
                pos[i][k] = base;
                let fd = (ep - em) / (2.0 * step);
                let scale = g[i].max_abs().max(1e-3);
                assert!((fd - g[i][k]).abs() <= 1e-6 * scale.max(fd.abs()) + 1e-7, "vertex {i} {k}: {fd} vs {}", g[i][k]);
            }
        }
    }

    #[test]
    fn reference_point_only_shifts_energy() {
        let m = perturbed_cap();
        let (o1, o2) = (BallPoint::ORIGIN, BallPoint::new(0.1, 0.2, -0.3).unwrap());
        let d1 = energy_ih(&m, 0.4, &o1).unwrap().i_h - energy_ih(&m, 0.4, &o2).unwrap().i_h;
        let mut v = m.vertices().to_vec();
        let i = m.boundary_mask().iter().position(|f| !f).unwrap();
        v[i] += Vec3::new(0.01, -0.02, 0.015);
        let m2 = m.with_positions(v).unwrap();
        let d2 = energy_ih(&m2, 0.4, &o1).unwrap().i_h - energy_ih(&m2, 0.4, &o2).unwrap().i_h;
        assert!((d1 - d2).abs() < 1e-8);
        let g1 = gradient_ih(&m, 0.4, &o1).unwrap();
        let g2 = gradient_ih(&m, 0.4, &o2).unwrap();
        for (k, f) in m.boundary_mask().iter().enumerate() {
            if !f {
                assert!((g1[k] - g2[k]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn rotation_leaves_energies_unchanged() {
        let m = perturbed_cap();
        let r = m.rotated(&Mat3::rotation(Vec3::new(1.0, 2.0, 0.5).normalized(), 0.7));
        let (a, b) = (energy_ih(&m, 0.3, &BallPoint::ORIGIN).unwrap(), energy_ih(&r, 0.3, &BallPoint::ORIGIN).unwrap());
        assert!((a.area - b.area).abs() < 1e-10);
        assert!((a.volume.abs() - b.volume.abs()).abs() < 1e-10);
        assert!((a.i_h - b.i_h).abs() < 1e-10);
    }

    #[test]
    fn critical_meshes_have_small_gradients() {
        let disk = flat_disk(1.5, 0.15).unwrap();
        let r = energy_ih(&disk, 0.0, &BallPoint::ORIGIN).unwrap();
        // Only tangential (mesh-distribution) forces remain on the flat disk.
        assert!(r.gradient_sup_norm < 1e-4, "{}", r.gradient_sup_norm);
        let g = gradient_ih(&disk, 0.0, &BallPoint::ORIGIN).unwrap();
        assert!(g.iter().all(|v| v.z == 0.0));
        assert_eq!(r.i_h, r.area);
        let cap = umbilic_cap(RoundCircle::equator(), 0.5, Side::Plus).unwrap();
        let coarse = exact_cap_mesh(&cap, 1.5, 0.2).unwrap();
        let fine = exact_cap_mesh(&cap, 1.5, 0.03).unwrap();
        let gc = energy_ih(&coarse, 0.5, &BallPoint::ORIGIN).unwrap().gradient_sup_norm;
        let gf = energy_ih(&fine, 0.5, &BallPoint::ORIGIN).unwrap().gradient_sup_norm;
        assert!(fine.num_vertices() > 10_000, "{}", fine.num_vertices());
        assert!(gf < gc && gf < 1e-3, "{gc} {gf} {}", fine.num_vertices());
    }
}
