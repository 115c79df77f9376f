//! Local remeshing: edge split, collapse and flip, plus tangential smoothing,
//! driven by hyperbolic edge lengths.

use super::{triangle_min_angle_deg, TriMesh, MIN_ANGLE_DEG};
use crate::error::{Error, Result};
use crate::hyperbolic::distance_vec;
use crate::math::Vec3;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// Knobs for [`refine_and_improve`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemeshOptions {
    /// Hyperbolic target edge length; `None` disables split and collapse.
    pub target: Option<f64>,
    /// Allow splitting boundary edges (new vertices land on the boundary polyline).
    pub split_boundary: bool,
    pub flips: bool,
    pub smoothing_iterations: usize,
    pub max_passes: usize,
    /// Collapse edges shorter than this fraction of the mean edge length
    /// around their endpoints (0 disables). Independent of `target`.
    pub collapse_relative: f64,
}

impl Default for RemeshOptions {
    fn default() -> Self {
        RemeshOptions { target: None, split_boundary: true, flips: true, smoothing_iterations: 3, max_passes: 8, collapse_relative: 0.0 }
    }
}

const DEAD: usize = usize::MAX;
/// Operations may not create triangles sharper than this.
const OP_MIN_ANGLE: f64 = 5.0;

struct Work {
    v: Vec<Vec3>,
    t: Vec<[usize; 3]>,
    vt: Vec<Vec<usize>>,
    fixed: Vec<bool>,
    loops: Vec<Vec<usize>>,
}

impl Work {
    fn new(m: &TriMesh) -> Self {
        Work {
            v: m.vertices().to_vec(),
            t: m.triangles().to_vec(),
            vt: m.vertex_triangles(),
            fixed: m.boundary_mask(),
            loops: m.boundary_loops().to_vec(),
        }
    }

    fn len(&self, a: usize, b: usize) -> f64 {
        distance_vec(self.v[a], self.v[b])
    }

    fn normal(&self, t: [usize; 3]) -> Vec3 {
        (self.v[t[1]] - self.v[t[0]]).cross(self.v[t[2]] - self.v[t[0]])
    }

    fn angle(&self, t: [usize; 3]) -> f64 {
        triangle_min_angle_deg(self.v[t[0]], self.v[t[1]], self.v[t[2]])
    }

    /// The live triangle containing half-edge `a → b`, rotated to start at `a`.
    fn half_edge(&self, a: usize, b: usize) -> Option<(usize, [usize; 3])> {
        for &ti in &self.vt[a] {
            let t = self.t[ti];
            if t[0] == DEAD {
                continue;
            }
            for k in 0..3 {
                if t[k] == a && t[(k + 1) % 3] == b {
                    return Some((ti, [a, b, t[(k + 2) % 3]]));
                }
            }
        }
        None
    }

    fn neighbors(&self, a: usize) -> Vec<usize> {
        let mut n: Vec<usize> = self.vt[a]
            .iter()
            .filter(|&&ti| self.t[ti][0] != DEAD)
            .flat_map(|&ti| self.t[ti])
            .filter(|&x| x != a)
            .collect();
        n.sort_unstable();
        n.dedup();
        n
    }

    fn set_tri(&mut self, ti: usize, t: [usize; 3]) {
        let old = self.t[ti];
        if old[0] != DEAD {
            for &x in &old {
                self.vt[x].retain(|&y| y != ti);
            }
        }
        self.t[ti] = t;
        if t[0] != DEAD {
            for &x in &t {
                self.vt[x].push(ti);
            }
        }
    }

    fn add_tri(&mut self, t: [usize; 3]) {
        self.t.push(t);
        let ti = self.t.len() - 1;
        for &x in &t {
            self.vt[x].push(ti);
        }
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = self
            .t
            .iter()
            .filter(|t| t[0] != DEAD)
            .flat_map(|t| [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])])
            .map(|(a, b)| (a.min(b), a.max(b)))
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    }

    fn split(&mut self, a: usize, b: usize, split_boundary: bool) -> bool {
        let (ab, ba) = (self.half_edge(a, b), self.half_edge(b, a));
        let (a, b, t1, t2) = match (ab, ba) {
            (Some(x), Some(y)) => (a, b, x, Some(y)),
            (Some(x), None) => (a, b, x, None),
            (None, Some(y)) => (b, a, y, None),
            (None, None) => return false,
        };
        if t2.is_none() && !split_boundary {
            return false;
        }
        let m = self.v.len();
        self.v.push((self.v[a] + self.v[b]) * 0.5);
        self.vt.push(Vec::new());
        self.fixed.push(t2.is_none());
        let (ti1, [_, _, c]) = t1;
        self.set_tri(ti1, [a, m, c]);
        self.add_tri([m, b, c]);
        if let Some((ti2, [_, _, d])) = t2 {
            self.set_tri(ti2, [b, m, d]);
            self.add_tri([m, a, d]);
        } else {
            for l in &mut self.loops {
                let n = l.len();
                if let Some(k) = (0..n).find(|&k| l[k] == a && l[(k + 1) % n] == b) {
                    l.insert(k + 1, m);
                    break;
                }
            }
        }
        true
    }

    /// Collapse `b` into `a`, keeping `a`'s position unless both are free.
    fn collapse(&mut self, a: usize, b: usize, max_len: f64) -> bool {
        let (a, b) = if self.fixed[b] && !self.fixed[a] { (b, a) } else { (a, b) };
        if self.fixed[b] {
            return false;
        }
        let shared: Vec<usize> = self.vt[b].iter().copied().filter(|ti| self.t[*ti].contains(&a)).collect();
        if shared.len() != 2 {
            return false;
        }
        let (na, nb) = (self.neighbors(a), self.neighbors(b));
        let common = na.iter().filter(|x| nb.binary_search(x).is_ok()).count();
        if common != 2 {
            return false;
        }
        let p = if self.fixed[a] { self.v[a] } else { (self.v[a] + self.v[b]) * 0.5 };
        let old_pa = self.v[a];
        let moved: Vec<usize> = self.vt[b].iter().chain(self.vt[a].iter()).copied().filter(|ti| !shared.contains(ti)).collect();
        let before: Vec<Vec3> = moved.iter().map(|&ti| self.normal(self.t[ti])).collect();
        self.v[a] = p;
        let mut ok = true;
        for (k, &ti) in moved.iter().enumerate() {
            let t = self.t[ti].map(|x| if x == b { a } else { x });
            let n = self.normal(t);
            if n.dot(before[k]) <= 0.0 || self.angle(t) < OP_MIN_ANGLE {
                ok = false;
                break;
            }
            for k in 0..3 {
                if self.len(t[k], t[(k + 1) % 3]) > max_len {
                    ok = false;
                }
            }
        }
        if !ok || p.norm2() >= 1.0 {
            self.v[a] = old_pa;
            return false;
        }
        for ti in shared {
            self.set_tri(ti, [DEAD; 3]);
        }
        let tb: Vec<usize> = self.vt[b].clone();
        for ti in tb {
            let t = self.t[ti].map(|x| if x == b { a } else { x });
            self.set_tri(ti, t);
        }
        true
    }

    /// Flip the interior edge `a–b` when that raises the smaller of the two minimum angles.
    fn flip(&mut self, a: usize, b: usize) -> bool {
        let (Some((t1, [_, _, c])), Some((t2, [_, _, d]))) = (self.half_edge(a, b), self.half_edge(b, a)) else {
            return false;
        };
        if c == d || self.neighbors(c).binary_search(&d).is_ok() {
            return false;
        }
        let old = self.angle([a, b, c]).min(self.angle([b, a, d]));
        let (n1, n2) = ([c, d, b], [d, c, a]);
        let new = self.angle(n1).min(self.angle(n2));
        if new <= old + 1e-6 {
            return false;
        }
        let ref_n = self.normal([a, b, c]) + self.normal([b, a, d]);
        if self.normal(n1).dot(ref_n) <= 0.0 || self.normal(n2).dot(ref_n) <= 0.0 {
            return false;
        }
        self.set_tri(t1, n1);
        self.set_tri(t2, n2);
        true
    }

    fn smooth(&mut self) {
        let n = self.v.len();
        let mut normals = vec![Vec3::ZERO; n];
        for t in self.t.iter().filter(|t| t[0] != DEAD) {
            let nt = self.normal(*t);
            for &x in t {
                normals[x] += nt;
            }
        }
        for i in 0..n {
            if self.fixed[i] || self.vt[i].is_empty() {
                continue;
            }
            let nb = self.neighbors(i);
            if nb.is_empty() {
                continue;
            }
            let avg = nb.iter().fold(Vec3::ZERO, |s, &j| s + self.v[j]) / nb.len() as f64;
            let nh = normals[i].normalized();
            let d = avg - self.v[i];
            let step = (d - nh * d.dot(nh)) * 0.5;
            let old = self.v[i];
            let old_min = self.vt[i].iter().map(|&ti| self.angle(self.t[ti])).fold(180.0, f64::min);
            let old_normals: Vec<Vec3> = self.vt[i].iter().map(|&ti| self.normal(self.t[ti])).collect();
            self.v[i] = old + step;
            let bad = self.v[i].norm2() >= 1.0
                || self.vt[i].iter().zip(&old_normals).any(|(&ti, on)| self.normal(self.t[ti]).dot(*on) <= 0.0)
                || self.vt[i].iter().map(|&ti| self.angle(self.t[ti])).fold(180.0, f64::min) < old_min.min(OP_MIN_ANGLE);
            if bad {
                self.v[i] = old;
            }
        }
    }

    fn finish(self, topology: super::Topology) -> Result<TriMesh> {
        let mut map = vec![DEAD; self.v.len()];
        let mut v = Vec::new();
        for (i, p) in self.v.iter().enumerate() {
            if self.vt[i].iter().any(|&ti| self.t[ti][0] != DEAD) {
                map[i] = v.len();
                v.push(*p);
            }
        }
        let t: Vec<[usize; 3]> = self.t.iter().filter(|t| t[0] != DEAD).map(|t| t.map(|x| map[x])).collect();
        let loops = self.loops.iter().map(|l| l.iter().map(|&x| map[x]).collect()).collect();
        TriMesh::new(v, t, loops, topology).map_err(|e| Error::RemeshingFailure(format!("{e}")))
    }
}

/// Remesh toward a hyperbolic edge-length target while preserving topology,
/// boundary loops and the mesh invariants.
pub fn refine_and_improve(mesh: &TriMesh, target_edge_length: f64) -> Result<TriMesh> {
    refine_with(mesh, &RemeshOptions { target: Some(target_edge_length), ..RemeshOptions::default() })
}

/// Remesh with explicit options.
pub fn refine_with(mesh: &TriMesh, opts: &RemeshOptions) -> Result<TriMesh> {
    if let Some(l) = opts.target {
        if !(l > 0.0) {
            return Err(Error::InvalidParameter(format!("target edge length must be positive, got {l}")));
        }
    }
    let mut w = Work::new(mesh);
    for _ in 0..opts.max_passes {
        let mut changed = false;
        if let Some(l) = opts.target {
            let hi = 4.0 / 3.0 * l;
            let mut long: Vec<(f64, usize, usize)> = w
                .edges()
                .into_iter()
                .map(|(a, b)| (w.len(a, b), a, b))
                .filter(|e| e.0 > hi)
                .collect();
            long.sort_by(|x, y| y.0.total_cmp(&x.0));
            for (_, a, b) in long {
                changed |= w.split(a, b, opts.split_boundary);
            }
            let lo = 0.8 * l;
            let short: Vec<(usize, usize)> = w.edges().into_iter().filter(|&(a, b)| w.len(a, b) < lo).collect();
            for (a, b) in short {
                let alive = |w: &Work, x: usize| w.vt[x].iter().any(|&ti| w.t[ti][0] != DEAD);
                if alive(&w, a) && alive(&w, b) && w.neighbors(a).binary_search(&b).is_ok() {
                    changed |= w.collapse(a, b, hi);
                }
            }
        }
        if opts.collapse_relative > 0.0 {
            let mut sum = vec![0.0; w.v.len()];
            let mut cnt = vec![0usize; w.v.len()];
            for (a, b) in w.edges() {
                let l = w.len(a, b);
                sum[a] += l;
                sum[b] += l;
                cnt[a] += 1;
                cnt[b] += 1;
            }
            let mean = |x: usize| sum[x] / cnt[x].max(1) as f64;
            let mut short: Vec<(f64, usize, usize)> = w
                .edges()
                .into_iter()
                .map(|(a, b)| (w.len(a, b) / (0.5 * (mean(a) + mean(b))), a, b))
                .filter(|e| e.0 < opts.collapse_relative)
                .collect();
            short.sort_by(|x, y| x.0.total_cmp(&y.0));
            for (_, a, b) in short {
                let alive = |w: &Work, x: usize| w.vt[x].iter().any(|&ti| w.t[ti][0] != DEAD);
                if alive(&w, a) && alive(&w, b) && w.neighbors(a).binary_search(&b).is_ok() {
                    changed |= w.collapse(a, b, 2.0 * mean(a).max(mean(b)));
                }
            }
        }
        if opts.flips {
            for (a, b) in w.edges() {
                if !(w.fixed[a] && w.fixed[b] && w.half_edge(a, b).is_none() != w.half_edge(b, a).is_none()) {
                    changed |= w.flip(a, b);
                }
            }
        }
        for _ in 0..opts.smoothing_iterations {
            w.smooth();
        }
        if !changed {
            break;
        }
    }
    let out = w.finish(mesh.topology())?;
    if out.min_angle_deg() < MIN_ANGLE_DEG {
        return Err(Error::RemeshingFailure(format!("minimum angle {:.3}° after remeshing", out.min_angle_deg())));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{annulus_between, flat_disk, hyperbolic_area, Quadrature, RingSchedule};
    use crate::math::{self, PI};

    #[test]
    fn refinement_quadruples_edges_and_keeps_area() {
        let d = flat_disk(1.0, 0.4).unwrap();
        let e0 = d.edges().len();
        let a0 = hyperbolic_area(&d, Quadrature::Order4).unwrap();
        let r = refine_and_improve(&d, 0.2).unwrap();
        let e1 = r.edges().len();
        let ratio = e1 as f64 / e0 as f64;
        assert!(ratio > 2.5 && ratio < 6.0, "ratio {ratio}");
        let a1 = hyperbolic_area(&r, Quadrature::Order4).unwrap();
        assert!(((a1 - a0) / a0).abs() < 5e-3);
        assert_eq!(r.topology(), d.topology());
    }

    #[test]
    fn conforming_mesh_keeps_topology() {
        let d = flat_disk(1.0, 0.25).unwrap();
        let r = refine_and_improve(&d, 0.25).unwrap();
        r.validate().unwrap();
        assert_eq!(r.euler_characteristic(), 1);
        let _ = RingSchedule::uniform(1.0, 2, 6);
    }

    #[test]
    fn annulus_stays_annulus() {
        let a = annulus_between(&[24, 24, 24], |s, u| {
            let r = 0.3 + 0.4 * s;
            Vec3::new(r * math::cos(2.0 * PI * u), r * math::sin(2.0 * PI * u), 0.0)
        })
        .unwrap();
        let r = refine_and_improve(&a, 0.15).unwrap();
        assert_eq!(r.euler_characteristic(), 0);
        assert_eq!(r.boundary_loops().len(), 2);
    }
}
