//! Triangle meshes in the ball and the hyperbolic energies on them.

mod build;
mod energy;
mod gulliver;
mod query;
mod remesh;

pub use build::{annulus_between, attach_annulus, exact_cap_mesh, exact_cap_mesh_with, flat_disk, geodesic_sphere, ring_disk, RingSchedule};
pub use energy::{
    energy_ih, enclosed_volume, gradient_ih, hyperbolic_area, hyperbolic_sup_norm, radial_flux_potential, EnergyModel, EnergyReport,
    Quadrature,
};
pub use gulliver::{gulliver_energy, gulliver_gradient, ParamGrid};
pub use query::{closest_point_on_triangle, point_mesh_distance, signed_point_mesh_distance};
pub use remesh::{refine_and_improve, refine_with, RemeshOptions};

use crate::error::{Error, Result};
use crate::hyperbolic::BallPoint;
use crate::math::{self, Mat3, Vec3};
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// Minimum allowed Euclidean triangle angle, degrees.
pub const MIN_ANGLE_DEG: f64 = 1.0;

/// Topology tag of a mesh, checked against the Euler characteristic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Topology {
    Disk,
    Annulus,
    Sphere,
}

impl Topology {
    pub fn euler_characteristic(self) -> i64 {
        match self {
            Topology::Disk => 1,
            Topology::Annulus => 0,
            Topology::Sphere => 2,
        }
    }

    pub fn boundary_components(self) -> usize {
        match self {
            Topology::Disk => 1,
            Topology::Annulus => 2,
            Topology::Sphere => 0,
        }
    }
}

/// An oriented triangle mesh with fixed boundary loops, strictly inside the unit ball.
///
/// Boundary loops follow the boundary half-edges of the triangles, so the
/// surface lies to the left of each loop when seen from the side its normal
/// points to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    boundary_loops: Vec<Vec<usize>>,
    topology: Topology,
}

impl TriMesh {
    /// Build and validate a mesh. Boundary loops may be given in either direction.
    pub fn new(
        vertices: Vec<Vec3>,
        triangles: Vec<[usize; 3]>,
        boundary_loops: Vec<Vec<usize>>,
        topology: Topology,
    ) -> Result<Self> {
        let mut m = TriMesh { vertices, triangles, boundary_loops, topology };
        m.orient_loops()?;
        m.validate()?;
        Ok(m)
    }

    /// Build a mesh without validating it.
    ///
    /// Used for fixtures that are valid by construction and for deliberately
    /// broken inputs in negative tests.
    pub fn new_unchecked(
        vertices: Vec<Vec3>,
        triangles: Vec<[usize; 3]>,
        boundary_loops: Vec<Vec<usize>>,
        topology: Topology,
    ) -> Self {
        TriMesh { vertices, triangles, boundary_loops, topology }
    }

    /// The empty mesh (no vertices, no triangles). Only `hyperbolic_area` and
    /// friends accept it.
    pub fn empty() -> Self {
        TriMesh { vertices: Vec::new(), triangles: Vec::new(), boundary_loops: Vec::new(), topology: Topology::Sphere }
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> BallPoint {
        BallPoint::new_unchecked(self.vertices[i])
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_loops(&self) -> &[Vec<usize>] {
        &self.boundary_loops
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// Undirected edges, each listed once with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<(usize, usize)> = self
            .triangles
            .iter()
            .flat_map(|t| [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])])
            .map(|(a, b)| if a < b { (a, b) } else { (b, a) })
            .collect();
        e.sort_unstable();
        e.dedup();
        e
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edges().len() as i64 + self.triangles.len() as i64
    }

    /// `true` for vertices on a boundary loop.
    pub fn boundary_mask(&self) -> Vec<bool> {
        let mut m = vec![false; self.vertices.len()];
        for l in &self.boundary_loops {
            for &i in l {
                m[i] = true;
            }
        }
        m
    }

    /// Sorted vertex neighbours.
    pub fn vertex_neighbors(&self) -> Vec<Vec<usize>> {
        let mut nb = vec![Vec::new(); self.vertices.len()];
        for t in &self.triangles {
            for k in 0..3 {
                nb[t[k]].push(t[(k + 1) % 3]);
                nb[t[k]].push(t[(k + 2) % 3]);
            }
        }
        for l in &mut nb {
            l.sort_unstable();
            l.dedup();
        }
        nb
    }

    /// Triangles incident to each vertex.
    pub fn vertex_triangles(&self) -> Vec<Vec<usize>> {
        let mut vt = vec![Vec::new(); self.vertices.len()];
        for (ti, t) in self.triangles.iter().enumerate() {
            for &v in t {
                vt[v].push(ti);
            }
        }
        vt
    }

    /// Euclidean area vector `½ (b − a) × (c − a)` of a triangle.
    pub fn area_vector(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.triangles[t];
        let (a, b, c) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        (b - a).cross(c - a) * 0.5
    }

    /// Area-weighted unit vertex normals.
    pub fn vertex_normals(&self) -> Vec<Vec3> {
        let mut n = vec![Vec3::ZERO; self.vertices.len()];
        for ti in 0..self.triangles.len() {
            let av = self.area_vector(ti);
            for &v in &self.triangles[ti] {
                n[v] += av;
            }
        }
        n.into_iter().map(|v| v.normalized()).collect()
    }

    /// Smallest Euclidean triangle angle, degrees.
    pub fn min_angle_deg(&self) -> f64 {
        min_angle_deg_of(&self.vertices, &self.triangles)
    }

    /// Same combinatorics with new positions; the geometric invariants are re-checked.
    pub fn with_positions(&self, positions: Vec<Vec3>) -> Result<TriMesh> {
        if positions.len() != self.vertices.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} positions, got {}",
                self.vertices.len(),
                positions.len()
            )));
        }
        check_geometry(&positions, &self.triangles)?;
        Ok(self.with_positions_unchecked(positions))
    }

    /// Replace positions without any checks.
    pub fn with_positions_unchecked(&self, positions: Vec<Vec3>) -> TriMesh {
        TriMesh {
            vertices: positions,
            triangles: self.triangles.clone(),
            boundary_loops: self.boundary_loops.clone(),
            topology: self.topology,
        }
    }

    /// Overwrite positions in place without any checks.
    pub fn set_positions_unchecked(&mut self, positions: &[Vec3]) {
        self.vertices.copy_from_slice(positions);
    }

    /// The same surface with the opposite orientation.
    pub fn reversed(&self) -> TriMesh {
        TriMesh {
            vertices: self.vertices.clone(),
            triangles: self.triangles.iter().map(|t| [t[0], t[2], t[1]]).collect(),
            boundary_loops: self
                .boundary_loops
                .iter()
                .map(|l| l.iter().rev().copied().collect())
                .collect(),
            topology: self.topology,
        }
    }

    /// Apply a Euclidean rotation about the origin (an isometry of the ball).
    pub fn rotated(&self, m: &Mat3) -> TriMesh {
        self.with_positions_unchecked(self.vertices.iter().map(|&v| *m * v).collect())
    }

    /// Largest Euclidean norm of a vertex.
    pub fn max_radius(&self) -> f64 {
        self.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Components of the `keep` vertices, joined through triangles whose
    /// vertices are all kept.
    pub fn connected_components(&self, keep: &[bool]) -> Vec<Vec<usize>> {
        let n = self.vertices.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for t in &self.triangles {
            if t.iter().all(|&v| keep[v]) {
                for k in 1..3 {
                    let (a, b) = (find(&mut parent, t[0]), find(&mut parent, t[k]));
                    if a != b {
                        parent[a.max(b)] = a.min(b);
                    }
                }
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for v in 0..n {
            if keep[v] {
                let r = find(&mut parent, v);
                groups.entry(r).or_default().push(v);
            }
        }
        groups.into_values().collect()
    }

    fn orient_loops(&mut self) -> Result<()> {
        let mut directed = BTreeMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                directed.insert((t[k], t[(k + 1) % 3]), ());
            }
        }
        for l in &mut self.boundary_loops {
            if l.len() < 3 {
                return Err(Error::InvalidInput(format!("boundary loop with {} vertices", l.len())));
            }
            if !directed.contains_key(&(l[0], l[1])) && directed.contains_key(&(l[1], l[0])) {
                l.reverse();
            }
        }
        Ok(())
    }

    /// Check every invariant of the type.
    pub fn validate(&self) -> Result<()> {
        let nv = self.vertices.len();
        for t in &self.triangles {
            if t.iter().any(|&i| i >= nv) || t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(Error::InvariantViolation(format!("bad triangle {t:?}")));
            }
        }
        // Directed edges must be unique (consistent orientation, ≤ 2 faces per edge).
        let mut directed: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for (ti, t) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                if directed.insert((t[k], t[(k + 1) % 3]), ti).is_some() {
                    return Err(Error::InvariantViolation(format!(
                        "edge {}→{} used twice in the same direction (non-manifold or inconsistent orientation)",
                        t[k],
                        t[(k + 1) % 3]
                    )));
                }
            }
        }
        let mut boundary: Vec<(usize, usize)> =
            directed.keys().filter(|(a, b)| !directed.contains_key(&(*b, *a))).copied().collect();
        boundary.sort_unstable();
        let mut looped: Vec<(usize, usize)> = Vec::new();
        for l in &self.boundary_loops {
            for k in 0..l.len() {
                looped.push((l[k], l[(k + 1) % l.len()]));
            }
        }
        looped.sort_unstable();
        if boundary != looped {
            return Err(Error::InvariantViolation(format!(
                "boundary edges ({}) do not match the boundary loops ({})",
                boundary.len(),
                looped.len()
            )));
        }
        // Vertex links: each vertex's incident triangles form a single fan.
        let vt = self.vertex_triangles();
        for (v, tris) in vt.iter().enumerate() {
            if tris.is_empty() {
                return Err(Error::InvariantViolation(format!("isolated vertex {v}")));
            }
            let mut next = BTreeMap::new();
            for &ti in tris {
                let t = self.triangles[ti];
                let k = t.iter().position(|&x| x == v).unwrap();
                next.insert(t[(k + 1) % 3], t[(k + 2) % 3]);
            }
            let start = next
                .keys()
                .copied()
                .find(|a| !next.values().any(|b| b == a))
                .unwrap_or_else(|| *next.keys().next().unwrap());
            let mut cur = start;
            let mut seen = 1;
            while let Some(&n) = next.get(&cur) {
                if n == start {
                    break;
                }
                cur = n;
                seen += 1;
                if seen > tris.len() + 1 {
                    break;
                }
            }
            let fan_len = if next.values().any(|&b| b == start) { seen } else { seen - 1 };
            if fan_len != tris.len() {
                return Err(Error::InvariantViolation(format!("vertex {v} is not a manifold vertex")));
            }
        }
        let chi = self.euler_characteristic();
        if chi != self.topology.euler_characteristic()
            || self.boundary_loops.len() != self.topology.boundary_components()
        {
            return Err(Error::InvariantViolation(format!(
                "topology tag {:?} does not match Euler characteristic {chi} with {} boundary loops",
                self.topology,
                self.boundary_loops.len()
            )));
        }
        check_geometry(&self.vertices, &self.triangles)
    }
}

fn check_geometry(vertices: &[Vec3], triangles: &[[usize; 3]]) -> Result<()> {
    for (i, v) in vertices.iter().enumerate() {
        if !v.is_finite() || v.norm2() >= 1.0 {
            return Err(Error::InvariantViolation(format!("vertex {i} not strictly inside the ball")));
        }
    }
    for (ti, t) in triangles.iter().enumerate() {
        let a = triangle_min_angle_deg(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
        if !(a >= MIN_ANGLE_DEG) {
            return Err(Error::InvariantViolation(format!("triangle {ti} has minimum angle {a:.4}°")));
        }
    }
    Ok(())
}

pub(crate) fn triangle_min_angle_deg(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    let ang = |p: Vec3, q: Vec3, r: Vec3| {
        let (u, v) = (q - p, r - p);
        math::atan2(u.cross(v).norm(), u.dot(v))
    };
    let m = ang(a, b, c).min(ang(b, c, a)).min(ang(c, a, b));
    m.to_degrees()
}

pub(crate) fn min_angle_deg_of(vertices: &[Vec3], triangles: &[[usize; 3]]) -> f64 {
    triangles
        .iter()
        .map(|t| triangle_min_angle_deg(vertices[t[0]], vertices[t[1]], vertices[t[2]]))
        .fold(180.0, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> (Vec<Vec3>, Vec<[usize; 3]>) {
        let v = vec![
            Vec3::new(-0.5, -0.5, 0.0),
            Vec3::new(0.5, -0.5, 0.0),
            Vec3::new(0.5, 0.5, 0.0),
            Vec3::new(-0.5, 0.5, 0.0),
        ];
        (v, vec![[0, 1, 2], [0, 2, 3]])
    }

    #[test]
    fn square_is_a_disk() {
        let (v, t) = square();
        let m = TriMesh::new(v, t, vec![vec![3, 2, 1, 0]], Topology::Disk).unwrap();
        assert_eq!(m.boundary_loops()[0].len(), 4);
        assert_eq!(m.euler_characteristic(), 1);
        // Loop direction follows the triangles.
        let l = &m.boundary_loops()[0];
        let pos = |x: usize| l.iter().position(|&y| y == x).unwrap();
        assert_eq!((pos(0) + 1) % 4, pos(1));
    }

    #[test]
    fn rejects_broken_meshes() {
        let (v, t) = square();
        assert!(TriMesh::new(v.clone(), t.clone(), vec![vec![0, 1, 2, 3]], Topology::Annulus).is_err());
        assert!(TriMesh::new(v.clone(), vec![[0, 1, 2], [0, 3, 2]], vec![vec![0, 1, 2, 3]], Topology::Disk).is_err());
        assert!(TriMesh::new(v.clone(), t.clone(), vec![vec![0, 1, 2]], Topology::Disk).is_err());
        let mut far = v.clone();
        far[2] = Vec3::new(0.8, 0.8, 0.0);
        assert!(TriMesh::new(far, t.clone(), vec![vec![0, 1, 2, 3]], Topology::Disk).is_err());
        let mut flat = v;
        flat[2] = Vec3::new(0.5, -0.49, 0.0);
        flat[3] = Vec3::new(-0.5, -0.49, 0.0);
        assert!(TriMesh::new(flat, t, vec![vec![0, 1, 2, 3]], Topology::Disk).is_err());
    }

    #[test]
    fn reversal_flips_normals_and_loops() {
        let (v, t) = square();
        let m = TriMesh::new(v, t, vec![vec![0, 1, 2, 3]], Topology::Disk).unwrap();
        let r = m.reversed();
        r.validate().unwrap();
        assert!((m.area_vector(0) + r.area_vector(0)).norm() < 1e-15);
    }
}
