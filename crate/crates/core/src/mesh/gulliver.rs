//! Flat-space parametric functional `F_H(u) = ∫ |u_x|² + |u_y|² + (4/3) H u·(u_x × u_y)`
//! over the unit disk, discretised on a square grid. Used only as a Euclidean
//! constant-mean-curvature cross-check.

use crate::error::{Error, Result};
use crate::math::{self, Vec3};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

/// Samples of a map `u: [−1, 1]² → R³` on an `m × m` grid (row-major, `x` fastest).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    m: usize,
    values: Vec<Vec3>,
}

impl ParamGrid {
    pub fn new(m: usize, values: Vec<Vec3>) -> Result<Self> {
        if m < 16 || values.len() != m * m {
            return Err(Error::InvalidParameter(format!("grid needs m ≥ 16 and m² values (m = {m})")));
        }
        Ok(ParamGrid { m, values })
    }

    /// Sample `f(x, y)` on the grid.
    pub fn from_fn<F: Fn(f64, f64) -> Vec3>(m: usize, f: F) -> Result<Self> {
        let mut values = Vec::with_capacity(m * m);
        for j in 0..m {
            for i in 0..m {
                let (x, y) = Self::coord(m, i, j);
                values.push(f(x, y));
            }
        }
        Self::new(m, values)
    }

    fn coord(m: usize, i: usize, j: usize) -> (f64, f64) {
        let h = 2.0 / (m - 1) as f64;
        (-1.0 + h * i as f64, -1.0 + h * j as f64)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Grid spacing.
    pub fn h(&self) -> f64 {
        2.0 / (self.m - 1) as f64
    }

    pub fn values(&self) -> &[Vec3] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Vec3] {
        &mut self.values
    }

    /// Nodes whose four incident cells lie entirely inside the unit disk; the
    /// remaining nodes form the fixed boundary ring.
    pub fn free_nodes(&self) -> Vec<bool> {
        let m = self.m;
        let w = cell_weights(m);
        let mut free = vec![false; m * m];
        for j in 1..m - 1 {
            for i in 1..m - 1 {
                let c = |ci: usize, cj: usize| w[cj * (m - 1) + ci];
                free[j * m + i] = [c(i - 1, j - 1), c(i, j - 1), c(i - 1, j), c(i, j)].iter().all(|&x| x >= 1.0);
            }
        }
        free
    }
}

/// Fraction of each grid cell covered by the unit disk (exact up to quadrature).
fn cell_weights(m: usize) -> Vec<f64> {
    let h = 2.0 / (m - 1) as f64;
    let mut w = vec![0.0; (m - 1) * (m - 1)];
    for j in 0..m - 1 {
        for i in 0..m - 1 {
            let (x0, y0) = (-1.0 + h * i as f64, -1.0 + h * j as f64);
            w[j * (m - 1) + i] = disk_square_overlap(x0, x0 + h, y0, y0 + h) / (h * h);
        }
    }
    w
}

/// Area of `[x0, x1] × [y0, y1] ∩ {x² + y² ≤ 1}`.
fn disk_square_overlap(x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let corners = [(x0, y0), (x1, y0), (x0, y1), (x1, y1)];
    if corners.iter().all(|&(x, y)| x * x + y * y <= 1.0) {
        return (x1 - x0) * (y1 - y0);
    }
    let (a, b) = (x0.max(-1.0), x1.min(1.0));
    if a >= b {
        return 0.0;
    }
    // Height of the vertical slice inside both sets is piecewise smooth in x,
    // with kinks where the circle crosses y0 or y1.
    let len = |x: f64| {
        let s = math::sqrt((1.0 - x * x).max(0.0));
        (y1.min(s) - y0.max(-s)).max(0.0)
    };
    let mut cuts = vec![a, b];
    for y in [y0, y1] {
        if y.abs() < 1.0 {
            let xs = math::sqrt(1.0 - y * y);
            for x in [xs, -xs] {
                if x > a && x < b {
                    cuts.push(x);
                }
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    // 8-point Gauss–Legendre on each smooth piece.
    const GX: [f64; 4] = [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_3];
    const GW: [f64; 4] = [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];
    let mut area = 0.0;
    for w in cuts.windows(2) {
        let (c, r) = (0.5 * (w[0] + w[1]), 0.5 * (w[1] - w[0]));
        for k in 0..4 {
            area += GW[k] * r * (len(c - r * GX[k]) + len(c + r * GX[k]));
        }
    }
    area
}

struct Cell {
    idx: [usize; 4],
    weight: f64,
}

fn cells(m: usize) -> Vec<Cell> {
    let w = cell_weights(m);
    let mut out = Vec::new();
    for j in 0..m - 1 {
        for i in 0..m - 1 {
            let weight = w[j * (m - 1) + i];
            if weight > 0.0 {
                out.push(Cell { idx: [j * m + i, j * m + i + 1, (j + 1) * m + i, (j + 1) * m + i + 1], weight });
            }
        }
    }
    out
}

/// Cell-centred differences: `(u_x, u_y, ū)` from corners `00, 10, 01, 11`.
fn cell_derivatives(v: &[Vec3], c: &Cell, h: f64) -> (Vec3, Vec3, Vec3) {
    let [p00, p10, p01, p11] = c.idx.map(|i| v[i]);
    let ux = ((p10 - p00) + (p11 - p01)) / (2.0 * h);
    let uy = ((p01 - p00) + (p11 - p10)) / (2.0 * h);
    let um = (p00 + p10 + p01 + p11) * 0.25;
    (ux, uy, um)
}

/// Discrete `F_H` on the unit disk with fractional cell weights at the rim.
pub fn gulliver_energy(u: &ParamGrid, h: f64) -> f64 {
    let hs = u.h();
    cells(u.m)
        .iter()
        .map(|c| {
            let (ux, uy, um) = cell_derivatives(&u.values, c, hs);
            c.weight * hs * hs * (ux.norm2() + uy.norm2() + (4.0 / 3.0) * h * um.dot(ux.cross(uy)))
        })
        .sum()
}

/// Exact gradient of [`gulliver_energy`] with respect to every node value.
pub fn gulliver_gradient(u: &ParamGrid, h: f64) -> Vec<Vec3> {
    let hs = u.h();
    let mut g = vec![Vec3::ZERO; u.values.len()];
    for c in cells(u.m) {
        let (ux, uy, um) = cell_derivatives(&u.values, &c, hs);
        let s = c.weight * hs * hs;
        let k = 4.0 / 3.0 * h;
        let d_ux = (ux * 2.0 + uy.cross(um) * k) * s;
        let d_uy = (uy * 2.0 + um.cross(ux) * k) * s;
        let d_um = ux.cross(uy) * (k * s);
        let sx = [-1.0, 1.0, -1.0, 1.0];
        let sy = [-1.0, -1.0, 1.0, 1.0];
        for n in 0..4 {
            g[c.idx[n]] += d_ux * (sx[n] / (2.0 * hs)) + d_uy * (sy[n] / (2.0 * hs)) + d_um * 0.25;
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::PI;

    #[test]
    fn identity_disk_has_energy_two_pi() {
        for m in [16, 33, 64] {
            let g = ParamGrid::from_fn(m, |x, y| Vec3::new(x, y, 0.0)).unwrap();
            assert!((gulliver_energy(&g, 0.0) - 2.0 * PI).abs() < 1e-6, "m = {m}");
            // Coplanar data through the origin: the H-term vanishes.
            assert!((gulliver_energy(&g, 0.7) - 2.0 * PI).abs() < 1e-6);
        }
    }

    #[test]
    fn overlap_area_sums_to_pi() {
        let w = cell_weights(40);
        let h = 2.0 / 39.0;
        assert!((w.iter().sum::<f64>() * h * h - PI).abs() < 1e-6);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut g = ParamGrid::from_fn(17, |x, y| Vec3::new(x + 0.1 * y * y, y, 0.3 * x * y)).unwrap();
        let h = 0.6;
        let grad = gulliver_gradient(&g, h);
        for &n in &[40usize, 100, 144, 200] {
            for k in 0..3 {
                let eps = 1e-6;
                let base = g.values()[n];
                g.values_mut()[n][k] = base[k] + eps;
                let ep = gulliver_energy(&g, h);
                g.values_mut()[n][k] = base[k] - eps;
                let em = gulliver_energy(&g, h);
                g.values_mut()[n] = base;
                let fd = (ep - em) / (2.0 * eps);
                assert!((fd - grad[n][k]).abs() < 1e-6 * (1.0 + fd.abs()), "{fd} vs {}", grad[n][k]);
            }
        }
    }

    #[test]
    fn conformal_hemisphere_is_nearly_critical() {
        let hemisphere = |x: f64, y: f64| {
            let q = x * x + y * y;
            Vec3::new(2.0 * x, 2.0 * y, 1.0 - q) / (1.0 + q)
        };
        let residual = |m: usize, h: f64| {
            let g = ParamGrid::from_fn(m, hemisphere).unwrap();
            let free = g.free_nodes();
            let hs = g.h();
            gulliver_gradient(&g, h)
                .iter()
                .zip(free)
                .filter(|(_, f)| *f)
                .map(|(v, _)| v.norm() / (hs * hs))
                .fold(0.0, f64::max)
        };
        // Outward normal u_x × u_y: the unit sphere is critical for H = −1.
        let (r1, r2) = (residual(33, -1.0), residual(65, -1.0));
        assert!(r2 < r1 && r2 < 0.05, "{r1} {r2}");
        assert!(residual(65, 1.0) > 1.0);
    }
}
