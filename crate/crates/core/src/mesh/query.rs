//! Point–surface proximity queries.

use super::TriMesh;
use crate::hyperbolic::distance_vec;
use crate::math::Vec3;

/// Euclidean closest point of triangle `abc` to `p` (Voronoi-region walk).
pub fn closest_point_on_triangle(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> Vec3 {
    let (ab, ac, ap) = (b - a, c - a, p - a);
    let (d1, d2) = (ab.dot(ap), ac.dot(ap));
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = p - b;
    let (d3, d4) = (ab.dot(bp), ac.dot(bp));
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let (d5, d6) = (ab.dot(cp), ac.dot(cp));
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

/// Hyperbolic distance from `p` to the mesh, measured to the Euclidean-closest
/// point of each triangle (exact to second order in the triangle size).
pub fn point_mesh_distance(p: Vec3, mesh: &TriMesh) -> f64 {
    let vs = mesh.vertices();
    mesh.triangles()
        .iter()
        .map(|t| distance_vec(p, closest_point_on_triangle(p, vs[t[0]], vs[t[1]], vs[t[2]])))
        .fold(f64::INFINITY, f64::min)
}

/// Signed hyperbolic distance from `p` to the mesh: positive on the side the
/// closest triangle's normal points to.
pub fn signed_point_mesh_distance(p: Vec3, mesh: &TriMesh) -> f64 {
    let vs = mesh.vertices();
    let mut best = (f64::INFINITY, 1.0);
    for t in mesh.triangles() {
        let (a, b, c) = (vs[t[0]], vs[t[1]], vs[t[2]]);
        let q = closest_point_on_triangle(p, a, b, c);
        let d = distance_vec(p, q);
        if d < best.0 {
            let n = (b - a).cross(c - a);
            best = (d, if (p - q).dot(n) >= 0.0 { 1.0 } else { -1.0 });
        }
    }
    best.0 * best.1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closest_point_regions() {
        let (a, b, c) = (Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0));
        assert_eq!(closest_point_on_triangle(Vec3::new(-1.0, -1.0, 0.0), a, b, c), a);
        let q = closest_point_on_triangle(Vec3::new(0.2, 0.2, 3.0), a, b, c);
        assert!((q - Vec3::new(0.2, 0.2, 0.0)).norm() < 1e-15);
        let q = closest_point_on_triangle(Vec3::new(1.0, 1.0, 0.0), a, b, c);
        assert!((q - Vec3::new(0.5, 0.5, 0.0)).norm() < 1e-15);
        assert_eq!(closest_point_on_triangle(Vec3::new(0.5, -2.0, 1.0), a, b, c), Vec3::new(0.5, 0.0, 0.0));
    }
}
