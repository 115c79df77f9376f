use hplane_core::hyperbolic::*;
use hplane_core::math::{self, Mat3, Vec3, PI};
use hplane_core::mesh::{energy_ih, exact_cap_mesh, flat_disk, gradient_ih, TriMesh};
use hplane_core::solver::{minimize_disk, SolverConfig};
use hplane_core::umbilic::{plane_level, supporting_halfspaces, umbilic_cap, IdealCurve, RoundCircle, Side};
use hplane_core::verify::{check_embedded, ordering_report, CheckReport};
use proptest::prelude::*;

fn ball_point(max: f64) -> impl Strategy<Value = Vec3> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, 0.0f64..max)
        .prop_filter("nonzero direction", |(x, y, z, _)| x * x + y * y + z * z > 1e-4)
        .prop_map(|(x, y, z, r)| Vec3::new(x, y, z).normalized() * r)
}

fn unit() -> impl Strategy<Value = Vec3> {
    ball_point(1.0).prop_map(|v| v.normalized())
}

fn bp(v: Vec3) -> BallPoint {
    BallPoint::from_vec(v).unwrap()
}

fn perturbed_cap(h: f64, seed: u64) -> TriMesh {
    let cap = umbilic_cap(RoundCircle::equator(), h, Side::Plus).unwrap();
    let m = exact_cap_mesh(&cap, 1.5, 0.3).unwrap();
    let mut rng = math::SplitMix64::new(seed);
    let fixed = m.boundary_mask();
    let v = m
        .vertices()
        .iter()
        .zip(&fixed)
        .map(|(p, &f)| if f { *p } else { *p + Vec3::new(rng.next_f64() - 0.5, rng.next_f64() - 0.5, rng.next_f64() - 0.5) * 0.02 })
        .collect();
    m.with_positions(v).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn triangle_inequality(p in ball_point(0.99), q in ball_point(0.99), r in ball_point(0.99)) {
        let (p, q, r) = (bp(p), bp(q), bp(r));
        prop_assert!(distance(&p, &r) <= distance(&p, &q) + distance(&q, &r) + 1e-9);
    }

    #[test]
    fn rotations_preserve_distance(p in ball_point(0.99), q in ball_point(0.99), axis in unit(), angle in 0.0..2.0 * PI) {
        let m = Mat3::rotation(axis, angle);
        let d0 = distance(&bp(p), &bp(q));
        let d1 = distance(&bp(m * p), &bp(m * q));
        prop_assert!((d0 - d1).abs() <= 1e-10 * d0.max(1.0));
    }

    #[test]
    fn radius_round_trip(r in 0.0f64..8.0) {
        let back = radius_from_euclidean(euclidean_from_radius(r));
        prop_assert!((back - r).abs() <= 1e-12);
        let rho = euclidean_from_radius(r);
        prop_assert!((euclidean_from_radius(radius_from_euclidean(rho)) - rho).abs() <= 1e-12);
    }

    #[test]
    fn upper_half_space_is_an_isometry(p in ball_point(0.95), q in ball_point(0.95)) {
        let (a, b) = (to_upper_half_space(&bp(p)), to_upper_half_space(&bp(q)));
        prop_assert!(a.t > 0.0 && b.t > 0.0);
        let d = distance(&bp(p), &bp(q));
        prop_assert!((uhs_distance(&a, &b) - d).abs() <= 1e-10 * d.max(1.0));
        let back = from_upper_half_space(&a).unwrap();
        prop_assert!((back.coords() - p).norm() <= 1e-12);
    }

    #[test]
    fn caps_are_equidistant_from_their_plane(
        axis in unit(), psi in 0.2f64..2.9, h in -0.9f64..0.9, plus in any::<bool>(),
        x in -0.7f64..0.7, y in -0.7f64..0.7,
    ) {
        let sigma = if plus { Side::Plus } else { Side::Minus };
        let circle = RoundCircle::new(IdealPoint::new(axis).unwrap(), psi).unwrap();
        let cap = umbilic_cap(circle, h, sigma).unwrap();
        let p = cap.point_from_foot(x, y);
        prop_assert!((plane_level(p, &circle) - cap.offset()).abs() <= 1e-9);
        prop_assert!((cap.offset().abs() - math::atanh(h.abs())).abs() <= 1e-12);
    }

    #[test]
    fn distinct_caps_over_one_circle_are_disjoint(
        psi in 0.2f64..2.9, h1 in -0.9f64..0.9, h2 in -0.9f64..0.9, x in -0.9f64..0.9, y in -0.4f64..0.4,
    ) {
        prop_assume!((h1 - h2).abs() > 1e-3);
        let circle = RoundCircle::new(IdealPoint::new(Vec3::Z).unwrap(), psi).unwrap();
        let c1 = umbilic_cap(circle, h1, Side::Plus).unwrap();
        let c2 = umbilic_cap(circle, h2, Side::Plus).unwrap();
        let gap = c2.level(c1.point_from_foot(x, y)).abs();
        prop_assert!((gap - (c1.offset() - c2.offset()).abs()).abs() <= 1e-8);
        prop_assert!(gap > 0.0);
    }

    #[test]
    fn check_report_passes_iff_within_tolerance(v in 0.0f64..2.0, tol in 0.0f64..2.0) {
        prop_assert_eq!(CheckReport::new("p", v, None, tol).pass, v <= tol);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn hull_shrinks_as_h_grows_on_the_matching_side(psi in 0.4f64..2.7, p in ball_point(0.9), h in 0.05f64..0.6, neg in any::<bool>()) {
        // H > 0 pushes the caps over circles in D⁺ toward the curve (and those in
        // D⁻ away from it); H < 0 does the opposite.
        let (h, side) = if neg { (-h, Side::Minus) } else { (h, Side::Plus) };
        let curve = IdealCurve::circle(Vec3::Z, psi, 64).unwrap();
        let inside = |h: f64| {
            supporting_halfspaces(&curve, h, 16).unwrap().halfspaces.iter().filter(|hs| hs.cap.sigma == side).all(|hs| hs.depth(p) >= -1e-12)
        };
        if inside(h + 0.3 * h.signum()) {
            prop_assert!(inside(h));
        }
    }

    #[test]
    fn energies_are_rotation_invariant(seed in any::<u64>(), axis in unit(), angle in 0.0..2.0 * PI, h in -0.8f64..0.8) {
        let m = perturbed_cap(0.3, seed);
        let r = m.rotated(&Mat3::rotation(axis, angle));
        let (a, b) = (energy_ih(&m, h, &BallPoint::ORIGIN).unwrap(), energy_ih(&r, h, &BallPoint::ORIGIN).unwrap());
        prop_assert!((a.area - b.area).abs() <= 1e-10);
        prop_assert!((a.volume.abs() - b.volume.abs()).abs() <= 1e-10);
        prop_assert!((a.i_h - b.i_h).abs() <= 1e-10);
    }

    #[test]
    fn gradient_does_not_depend_on_the_reference_point(seed in any::<u64>(), o in ball_point(0.4), h in -0.8f64..0.8) {
        let m = perturbed_cap(0.2, seed);
        let g1 = gradient_ih(&m, h, &BallPoint::ORIGIN).unwrap();
        let g2 = gradient_ih(&m, h, &bp(o)).unwrap();
        for (k, f) in m.boundary_mask().iter().enumerate() {
            if !f {
                prop_assert!((g1[k] - g2[k]).norm() <= 1e-10 * g1[k].norm().max(1.0));
            }
        }
    }

    #[test]
    fn gradient_matches_central_differences(seed in any::<u64>(), h in -0.8f64..0.8, pick in any::<prop::sample::Index>(), k in 0usize..3) {
        let m = perturbed_cap(0.4, seed);
        let free: Vec<usize> = m.boundary_mask().iter().enumerate().filter(|(_, f)| !**f).map(|(i, _)| i).collect();
        let i = free[pick.index(free.len())];
        let g = gradient_ih(&m, h, &BallPoint::ORIGIN).unwrap();
        let mut pos = m.vertices().to_vec();
        let step = 1e-6 * (1.0 - pos[i].norm2());
        let base = pos[i][k];
        let e = |v: &Vec<Vec3>| energy_ih(&m.with_positions_unchecked(v.clone()), h, &BallPoint::ORIGIN).unwrap().i_h;
        pos[i][k] = base + step;
        let ep = e(&pos);
        pos[i][k] = base - step;
        let em = e(&pos);
        let fd = (ep - em) / (2.0 * step);
        // Full energies lose digits to cancellation; 1e-6 relative holds on the local sums (unit tests).
        prop_assert!((fd - g[i][k]).abs() <= 1e-4 * g[i].max_abs().max(1e-2), "{} vs {}", fd, g[i][k]);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn solves_stay_in_the_ball_and_descend(h in -0.6f64..0.6, amp in 0.0f64..0.15, k in 2u32..5) {
        let r = 1.5;
        let e = euclidean_from_radius(r);
        let boundary: Vec<Vec3> = (0..48)
            .map(|i| {
                let t = 2.0 * PI * i as f64 / 48.0;
                let z = amp * math::sin(k as f64 * t);
                Vec3::new(math::cos(t), math::sin(t), z).normalized() * e
            })
            .collect();
        let mut cfg = SolverConfig::new(h, r).unwrap();
        cfg.init_edge_length = 0.25;
        cfg.max_iterations = 400;
        let (m, rep) = minimize_disk(&boundary, &cfg, None).unwrap();
        prop_assert!(rep.history_monotone());
        prop_assert!(m.max_radius() <= e * (1.0 + 1e-12));
        prop_assert!(check_embedded(&m).pass);
    }

    #[test]
    fn ordering_is_invariant_under_relabeling(hs in prop::collection::vec(-0.8f64..0.8, 2..5)) {
        let mut hs = hs;
        hs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        hs.dedup_by(|a, b| (*a - *b).abs() < 1e-2);
        let meshes: Vec<TriMesh> = hs
            .iter()
            .map(|&h| exact_cap_mesh(&umbilic_cap(RoundCircle::equator(), h, Side::Plus).unwrap(), 2.0, 0.3).unwrap())
            .collect();
        let (fwd, s1) = ordering_report(&meshes, 1.5);
        let mut rev = meshes.clone();
        rev.reverse();
        let (bwd, s2) = ordering_report(&rev, 1.5);
        prop_assert_eq!(fwd.pass, bwd.pass);
        prop_assert!(fwd.pass);
        if meshes.len() > 1 {
            prop_assert_eq!(s1, -s2);
        }
    }
}

#[test]
fn flat_disk_is_embedded_and_crossing_disks_are_not() {
    let m = flat_disk(1.0, 0.2).unwrap();
    assert!(check_embedded(&m).pass);
    // Union of the disk and a perpendicular copy: the sheets cross along a diameter.
    let q = m.rotated(&Mat3::rotation(Vec3::X, PI / 2.0));
    let n = m.num_vertices();
    let mut v = m.vertices().to_vec();
    v.extend_from_slice(q.vertices());
    let mut t = m.triangles().to_vec();
    t.extend(q.triangles().iter().map(|t| [t[0] + n, t[1] + n, t[2] + n]));
    let crossed = TriMesh::new_unchecked(v, t, Vec::new(), m.topology());
    let r = check_embedded(&crossed);
    assert!(!r.pass && r.violation >= 4.0, "{r:?}");
    let x = r.location.unwrap();
    assert!(x.z.abs() < 1e-9 && x.y.abs() < 1e-9, "{x:?}");
}
