use hplane_core::error::Error;
use hplane_core::exhaustion::*;
use hplane_core::hyperbolic::euclidean_from_radius;
use hplane_core::math::{Vec3, PI};
use hplane_core::mesh::{exact_cap_mesh, point_mesh_distance, TriMesh};
use hplane_core::verify::check_embedded;
use hplane_core::umbilic::{supporting_halfspaces, umbilic_cap, IdealCurve, RoundCircle, Side, UmbilicCap};

fn equator() -> IdealCurve {
    IdealCurve::circle(Vec3::Z, PI / 2.0, 128).unwrap()
}

fn test_ellipse() -> IdealCurve {
    let raw = IdealCurve::ellipse(Vec3::Z, 0.6, 1.1, 128).unwrap();
    center_on_hull(&raw, 0.0, 64).unwrap().0
}

/// Two-sided Hausdorff distance between a mesh and an exact cap inside B_k.
fn core_distance_to_cap(m: &TriMesh, cap: &UmbilicCap, k: f64) -> f64 {
    let e = euclidean_from_radius(k);
    let to_cap = m.vertices().iter().filter(|p| p.norm() <= e).map(|p| cap.level(*p).abs()).fold(0.0, f64::max);
    let exact = exact_cap_mesh(cap, k + 1.0, 0.1).unwrap();
    let to_mesh = exact.vertices().iter().filter(|p| p.norm() <= e).map(|&p| point_mesh_distance(p, m)).fold(0.0, f64::max);
    to_cap.max(to_mesh)
}

#[test]
fn equator_projects_to_the_equatorial_circle() {
    let curve = equator();
    let hull = supporting_halfspaces(&curve, 0.0, 64).unwrap();
    for r in [2.0, 5.0] {
        let b = band(&curve, &hull, r, 64).unwrap();
        let g = boundary_curve(&b, 96).unwrap();
        let e = euclidean_from_radius(r);
        for p in &g {
            assert!(p.z.abs() < 1e-12);
            assert!((p.norm() - e).abs() < 1e-9);
        }
        assert_eq!(b.winding(&g), 1);
    }
}

#[test]
fn ellipse_gap_shrinks_with_radius() {
    let curve = test_ellipse();
    let hull = supporting_halfspaces(&curve, 0.0, 64).unwrap();
    assert!(hull.violation(Vec3::ZERO) <= 0.0);
    let gaps: Vec<f64> = [2.0, 4.0, 6.0, 8.0]
        .iter()
        .map(|&r| ideal_gap(&boundary_curve(&band(&curve, &hull, r, 128).unwrap(), 192).unwrap(), &curve))
        .collect();
    assert!(gaps.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{gaps:?}");
    assert!(gaps[3] <= 1e-3, "{gaps:?}");
}

#[test]
fn shifted_hull_pushes_gamma_into_the_band() {
    // For H ≠ 0 the band of a round circle leaves the equator; γ_r follows it.
    let curve = equator();
    let hull = supporting_halfspaces(&curve, 0.4, 64).unwrap();
    let b = band(&curve, &hull, 3.0, 96).unwrap();
    let g = boundary_curve(&b, 96).unwrap();
    assert!(g.iter().all(|&p| b.contains(p, 1e-9)));
    assert!(g.iter().all(|p| p.z < 0.0));
    assert_eq!(b.winding(&g), 1);
}

#[test]
fn band_below_the_hull_reports_radius_too_small() {
    let curve = equator();
    let hull = supporting_halfspaces(&curve, 0.9, 64).unwrap();
    // The H = 0.9 cap sits 1.47 below the origin and misses ∂B_1.
    assert!(matches!(band(&curve, &hull, 1.0, 32), Err(Error::RadiusTooSmall { .. })));
}

#[test]
fn nonseparating_loops() {
    let curve = test_ellipse();
    let hull = supporting_halfspaces(&curve, 0.0, 64).unwrap();
    let b = band(&curve, &hull, 3.0, 128).unwrap();
    let g = boundary_curve(&b, 128).unwrap();
    assert!(!nonseparating_check(&g, &b).unwrap());
    let small = band_loop(&b, 0.3, 0.02, 0.5, 8);
    assert!(nonseparating_check(&small, &b).unwrap());
    let off: Vec<Vec3> = small.iter().map(|p| *p * 0.5).collect();
    assert!(matches!(nonseparating_check(&off, &b), Err(Error::InvalidInput(_))));
}

#[test]
fn round_circle_stages_approach_the_exact_surfaces() {
    for h in [0.0, 0.5] {
        let cap = umbilic_cap(RoundCircle::equator(), h, Side::Plus).unwrap();
        let mut cfg = ExhaustionConfig::new(h).unwrap();
        cfg.radii = vec![2.0, 3.0, 4.0, 5.0];
        cfg.solver.init_edge_length = 0.12;
        let stages = run_exhaustion(&equator(), &cfg).unwrap();
        assert_eq!(stages.len(), 4);
        let mut errs = Vec::new();
        for s in &stages {
            assert!(s.failure.is_none(), "{:?}", s.failure);
            assert!(s.report.as_ref().unwrap().history_monotone());
            assert_eq!(s.core_components, 1);
            assert!(s.core_area_ok());
            assert!(check_embedded(s.disk.as_ref().unwrap()).pass);
            errs.push(core_distance_to_cap(s.disk.as_ref().unwrap(), &cap, cfg.core_radius));
        }
        assert!(errs.windows(2).all(|w| w[1] <= w[0] + 1e-4), "H = {h}: {errs:?}");
        let haus: Vec<f64> = stages[1..].iter().map(|s| s.hausdorff_to_prev_on_core.unwrap()).collect();
        if h == 0.0 {
            assert!(errs.iter().all(|&e| e <= 0.01), "{errs:?}");
        } else {
            assert!(errs[3] <= 0.01, "{errs:?}");
            assert!(haus.windows(2).all(|w| w[1] < w[0]), "{haus:?}");
        }
    }
}

#[test]
fn barrier_grows_and_clears_the_probe() {
    let curve = test_ellipse();
    let radii = [2.0, 2.5, 3.0, 3.5, 4.0];
    let p = barrier_profile(&curve, &radii, &BarrierConfig::new().unwrap()).unwrap();
    assert!(p.truncated.is_none(), "{:?}", p.truncated);
    assert!(p.monotone(), "{:?}", p.f);
    assert!(p.at(4.0).unwrap() > p.at(2.0).unwrap() + 1.0, "{:?}", p.f);
    let r0 = p.r0.unwrap();
    for (&r, f) in radii.iter().zip(&p.f) {
        if r >= r0 {
            assert!(f.unwrap() > p.probe_length);
        }
    }
    // τ± sit on opposite sides of Γ and stay clear of it.
    let (tp, tm) = p.tau;
    assert_eq!(curve.side_of(tp.axis.dir()), Side::Plus);
    assert_eq!(curve.side_of(tm.axis.dir()), Side::Minus);
    for t in [tp, tm] {
        assert!(curve.distance_to(t.axis.dir()) > t.angular_radius);
    }
}

#[test]
fn centering_puts_the_origin_in_the_hull() {
    let raw = IdealCurve::ellipse(Vec3::Z, 0.6, 1.1, 96).unwrap();
    assert!(supporting_halfspaces(&raw, 0.0, 64).unwrap().violation(Vec3::ZERO) > 0.0);
    let (c, beta) = center_on_hull(&raw, 0.0, 64).unwrap();
    assert!(beta != 0.0);
    assert!(supporting_halfspaces(&c, 0.0, 64).unwrap().violation(Vec3::ZERO) <= 0.0);
}
