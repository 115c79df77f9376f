//! Mesh builders: graded ring disks, annuli, icospheres and exact caps.

use super::{Topology, TriMesh};
use crate::error::{Error, Result};
use crate::hyperbolic::euclidean_from_radius;
use crate::math::{self, Vec3, PI};
use crate::umbilic::UmbilicCap;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// Concentric rings of a disk in a polar parameter domain `(ρ, u)`, where `ρ` is
/// a hyperbolic radius and `u ∈ [0, 1)` the angular parameter.
///
/// Ring `k` carries `counts[k]` points at `u = (i + shift_k) / counts[k]`.
/// A schedule built with the same anchors is deterministic from the centre
/// outwards, so the schedule up to an inner anchor is a prefix of any larger one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RingSchedule {
    pub radii: Vec<f64>,
    pub counts: Vec<usize>,
}

impl RingSchedule {
    /// Graded rings up to `outer` with circumferential spacing `h0` (hyperbolic)
    /// until `n_max` points per ring, passing exactly through every anchor radius.
    pub fn graded(outer: f64, anchors: &[f64], h0: f64, n_max: usize, max_step: f64) -> Result<Self> {
        if !(outer > 0.0 && h0 > 0.0 && max_step > 0.0) || n_max < 6 {
            return Err(Error::InvalidParameter(format!(
                "bad ring schedule: outer {outer}, h0 {h0}, n_max {n_max}, max_step {max_step}"
            )));
        }
        let count = |rho: f64| -> usize {
            let n = math::round(2.0 * PI * math::sinh(rho) / h0) as usize;
            n.clamp(6, n_max)
        };
        let mut anchors: Vec<f64> = anchors.iter().copied().filter(|&a| a > 0.0).collect();
        anchors.push(outer);
        anchors.sort_by(f64::total_cmp);
        let (mut radii, mut counts) = (Vec::new(), Vec::new());
        let mut rho = 0.0;
        while rho < outer - 1e-12 {
            let spacing = 2.0 * PI * math::sinh(rho.max(h0)) / count(rho.max(h0)) as f64;
            let step = (0.87 * spacing).clamp(0.8 * h0, max_step.max(0.8 * h0));
            let mut next = rho + step;
            if let Some(&a) = anchors.iter().find(|&&a| a > rho + 1e-12) {
                if next > a - 0.35 * step {
                    next = a;
                }
            }
            rho = next;
            radii.push(rho);
            counts.push(count(rho));
        }
        Ok(RingSchedule { radii, counts })
    }

    /// Uniform rings: `m` rings at `outer·k/m`, each with `n` points.
    pub fn uniform(outer: f64, m: usize, n: usize) -> Self {
        RingSchedule { radii: (1..=m).map(|k| outer * k as f64 / m as f64).collect(), counts: vec![n; m] }
    }

    /// Number of mesh vertices (centre included).
    pub fn num_vertices(&self) -> usize {
        1 + self.counts.iter().sum::<usize>()
    }

    /// Parameter of point `i` on ring `k`.
    pub fn param(&self, k: usize, i: usize) -> f64 {
        let n = self.counts[k];
        let shift = if k % 2 == 1 { 0.5 } else { 0.0 };
        (i as f64 + shift) / n as f64
    }

    /// Index of the first vertex of ring `k` (vertex 0 is the centre).
    pub fn ring_start(&self, k: usize) -> usize {
        1 + self.counts[..k].iter().sum::<usize>()
    }

    /// The schedule truncated to rings with radius ≤ `rho`.
    pub fn truncated(&self, rho: f64) -> RingSchedule {
        let m = self.radii.iter().take_while(|&&r| r <= rho + 1e-12).count();
        RingSchedule { radii: self.radii[..m].to_vec(), counts: self.counts[..m].to_vec() }
    }
}

/// Triangulate the cyclic strip between ring `a` (inner) and ring `b` (outer),
/// both listed as `(vertex, param)` in increasing parameter order.
fn stitch(a: &[(usize, f64)], b: &[(usize, f64)], tris: &mut Vec<[usize; 3]>) {
    let (na, nb) = (a.len(), b.len());
    let ua = |i: usize| a[i % na].1 + (i / na) as f64;
    let ub = |j: usize| b[j % nb].1 + (j / nb) as f64;
    let (mut i, mut j) = (0usize, 0usize);
    while i < na || j < nb {
        let adv_a = if i >= na {
            false
        } else if j >= nb {
            true
        } else {
            // Advance whichever ring has the nearer next parameter.
            0.5 * (ua(i) + ua(i + 1)) < 0.5 * (ub(j) + ub(j + 1))
        };
        let (ai, bj) = (a[i % na].0, b[j % nb].0);
        if adv_a {
            tris.push([ai, bj, a[(i + 1) % na].0]);
            i += 1;
        } else {
            tris.push([ai, bj, b[(j + 1) % nb].0]);
            j += 1;
        }
    }
}

/// Disk mesh from a ring schedule and a map `(ρ, u) ↦ point`.
///
/// For a map that is counter-clockwise in `u` seen from the normal side, the
/// triangle normals point toward that side; the boundary loop is the outer
/// ring in increasing `u`.
pub fn ring_disk<F: Fn(f64, f64) -> Vec3>(schedule: &RingSchedule, map: F) -> Result<TriMesh> {
    if schedule.radii.is_empty() {
        return Err(Error::InvalidParameter("ring schedule has no rings".into()));
    }
    let mut vertices = vec![map(0.0, 0.0)];
    let mut rings: Vec<Vec<(usize, f64)>> = Vec::new();
    for (k, &rho) in schedule.radii.iter().enumerate() {
        let mut ring = Vec::with_capacity(schedule.counts[k]);
        for i in 0..schedule.counts[k] {
            let u = schedule.param(k, i);
            ring.push((vertices.len(), u));
            vertices.push(map(rho, u));
        }
        rings.push(ring);
    }
    let mut tris = Vec::new();
    let r0 = &rings[0];
    for i in 0..r0.len() {
        tris.push([0, r0[i].0, r0[(i + 1) % r0.len()].0]);
    }
    for k in 1..rings.len() {
        stitch(&rings[k - 1], &rings[k], &mut tris);
    }
    let boundary = rings.last().unwrap().iter().map(|p| p.0).collect();
    TriMesh::new(vertices, tris, vec![boundary], Topology::Disk)
}

/// Flat equatorial geodesic disk of hyperbolic radius `rho`, normal `+e₃`.
pub fn flat_disk(rho: f64, h0: f64) -> Result<TriMesh> {
    let sched = RingSchedule::graded(rho, &[], h0, usize::MAX / 8, 0.35)?;
    ring_disk(&sched, |r, u| {
        let e = euclidean_from_radius(r);
        Vec3::new(e * math::cos(2.0 * PI * u), e * math::sin(2.0 * PI * u), 0.0)
    })
}

/// Annulus from `counts.len()` rings at `s = k / (m − 1)` and a map `(s, u) ↦ point`.
/// Loop 0 is the ring at `s = 0`, loop 1 the ring at `s = 1`.
pub fn annulus_between<F: Fn(f64, f64) -> Vec3>(counts: &[usize], map: F) -> Result<TriMesh> {
    let m = counts.len();
    if m < 2 || counts.iter().any(|&c| c < 3) {
        return Err(Error::InvalidParameter("annulus needs ≥ 2 rings of ≥ 3 points".into()));
    }
    let mut vertices = Vec::new();
    let mut rings: Vec<Vec<(usize, f64)>> = Vec::new();
    for (k, &n) in counts.iter().enumerate() {
        let s = k as f64 / (m - 1) as f64;
        let shift = if k % 2 == 1 { 0.5 } else { 0.0 };
        let ring: Vec<(usize, f64)> = (0..n)
            .map(|i| {
                let u = (i as f64 + shift) / n as f64;
                vertices.push(map(s, u));
                (vertices.len() - 1, u)
            })
            .collect();
        rings.push(ring);
    }
    let mut tris = Vec::new();
    for k in 1..m {
        stitch(&rings[k - 1], &rings[k], &mut tris);
    }
    let inner: Vec<usize> = rings[0].iter().map(|p| p.0).collect();
    let outer: Vec<usize> = rings[m - 1].iter().map(|p| p.0).collect();
    TriMesh::new(vertices, tris, vec![inner, outer], Topology::Annulus)
}

/// Glue `annulus` onto the boundary of `disk`, identifying annulus loop 0 with
/// the disk boundary by vertex position. The annulus is reversed if needed so
/// that orientations agree.
pub fn attach_annulus(disk: &TriMesh, annulus: &TriMesh) -> Result<TriMesh> {
    if disk.topology() != Topology::Disk || annulus.topology() != Topology::Annulus {
        return Err(Error::InvalidInput("attach_annulus needs a disk and an annulus".into()));
    }
    let (dl, al) = (&disk.boundary_loops()[0], &annulus.boundary_loops()[0]);
    if dl.len() != al.len() {
        return Err(Error::InvalidInput(format!("loop sizes differ ({} vs {})", dl.len(), al.len())));
    }
    let mut map = vec![usize::MAX; annulus.num_vertices()];
    for &a in al {
        let p = annulus.vertices()[a];
        let (d, dist) = dl
            .iter()
            .map(|&d| (d, (disk.vertices()[d] - p).norm()))
            .fold((usize::MAX, f64::INFINITY), |b, x| if x.1 < b.1 { x } else { b });
        if dist > 1e-9 {
            return Err(Error::InvalidInput(format!("annulus loop vertex {a} is {dist:.3e} from the disk boundary")));
        }
        map[a] = d;
    }
    let mut vertices = disk.vertices().to_vec();
    for (v, m) in map.iter_mut().enumerate() {
        if *m == usize::MAX {
            *m = vertices.len();
            vertices.push(annulus.vertices()[v]);
        }
    }
    let directed: BTreeSet<(usize, usize)> =
        disk.triangles().iter().flat_map(|t| [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])]).collect();
    let mut tris: Vec<[usize; 3]> = annulus.triangles().iter().map(|t| t.map(|x| map[x])).collect();
    let clash = tris.iter().any(|t| (0..3).any(|k| directed.contains(&(t[k], t[(k + 1) % 3]))));
    if clash {
        for t in &mut tris {
            t.swap(1, 2);
        }
    }
    let outer: Vec<usize> = annulus.boundary_loops()[1].iter().map(|&v| map[v]).collect();
    let mut all = disk.triangles().to_vec();
    all.extend(tris);
    TriMesh::new(vertices, all, vec![outer], Topology::Disk)
}

/// Geodesic sphere of hyperbolic radius `r` about the origin: an icosphere with
/// `level` subdivisions (`10·4^level + 2` vertices).
pub fn geodesic_sphere(r: f64, level: u32, outward: bool) -> Result<TriMesh> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("sphere radius must be positive, got {r}")));
    }
    let t = (1.0 + math::sqrt(5.0)) / 2.0;
    let mut v: Vec<Vec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalized())
    .collect();
    let mut f: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut mid: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut nf = Vec::with_capacity(f.len() * 4);
        let mut midpoint = |a: usize, b: usize, v: &mut Vec<Vec3>| -> usize {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                v.push((v[a] + v[b]).normalized());
                v.len() - 1
            })
        };
        for t in &f {
            let ab = midpoint(t[0], t[1], &mut v);
            let bc = midpoint(t[1], t[2], &mut v);
            let ca = midpoint(t[2], t[0], &mut v);
            nf.push([t[0], ab, ca]);
            nf.push([t[1], bc, ab]);
            nf.push([t[2], ca, bc]);
            nf.push([ab, bc, ca]);
        }
        f = nf;
    }
    let e = euclidean_from_radius(r);
    let v = v.into_iter().map(|p| p * e).collect();
    let m = TriMesh::new(v, f, Vec::new(), Topology::Sphere)?;
    Ok(if outward { m } else { m.reversed() })
}

/// Mesh of an exact umbilic cap over the foot disk of hyperbolic radius `rho`
/// in its geodesic plane, oriented by the cap's unit normal.
pub fn exact_cap_mesh(cap: &UmbilicCap, rho: f64, h0: f64) -> Result<TriMesh> {
    let sched = RingSchedule::graded(rho, &[], h0, usize::MAX / 8, 0.35)?;
    exact_cap_mesh_with(cap, &sched)
}

/// Exact cap mesh on a given ring schedule.
pub fn exact_cap_mesh_with(cap: &UmbilicCap, sched: &RingSchedule) -> Result<TriMesh> {
    let m = ring_disk(sched, |r, u| {
        let e = euclidean_from_radius(r);
        cap.point_from_foot(e * math::cos(2.0 * PI * u), e * math::sin(2.0 * PI * u))
    })?;
    Ok(match cap.sigma {
        crate::umbilic::Side::Plus => m,
        crate::umbilic::Side::Minus => m.reversed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::umbilic::{umbilic_cap, RoundCircle, Side};

    #[test]
    fn graded_schedule_has_prefix_property() {
        let anchors = [2.0, 3.0, 4.0];
        let a = RingSchedule::graded(3.0, &anchors, 0.2, 128, 0.35).unwrap();
        let b = RingSchedule::graded(4.0, &anchors, 0.2, 128, 0.35).unwrap();
        assert_eq!(&b.radii[..a.radii.len()], &a.radii[..]);
        assert_eq!(&b.counts[..a.counts.len()], &a.counts[..]);
        assert!(a.radii.contains(&2.0) && *a.radii.last().unwrap() == 3.0);
        assert_eq!(b.truncated(3.0), a);
    }

    #[test]
    fn disks_spheres_and_annuli_are_valid() {
        let d = flat_disk(1.0, 0.2).unwrap();
        assert_eq!(d.topology(), Topology::Disk);
        assert!(d.min_angle_deg() > 20.0, "{}", d.min_angle_deg());
        for ti in 0..d.num_triangles() {
            assert!(d.area_vector(ti).z > 0.0);
        }
        let s = geodesic_sphere(1.0, 2, true).unwrap();
        assert_eq!(s.num_vertices(), 162);
        let a = annulus_between(&[12, 12, 16, 20], |s, u| {
            let r = 0.3 + 0.3 * s;
            Vec3::new(r * math::cos(2.0 * PI * u), r * math::sin(2.0 * PI * u), 0.0)
        })
        .unwrap();
        assert_eq!(a.euler_characteristic(), 0);
    }

    #[test]
    fn cap_mesh_orientation_follows_sigma() {
        let circle = RoundCircle::equator();
        for sigma in [Side::Plus, Side::Minus] {
            let cap = umbilic_cap(circle, 0.5, sigma).unwrap();
            let m = exact_cap_mesh(&cap, 1.0, 0.2).unwrap();
            let n = m.vertex_normals();
            for (i, p) in m.vertices().iter().enumerate() {
                assert!(n[i].dot(cap.unit_normal(*p)) > 0.95);
            }
        }
    }
}
