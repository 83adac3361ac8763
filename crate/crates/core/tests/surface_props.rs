//! Total curvature and area of radial-graph hypersurfaces against closed
//! forms for geodesic spheres and Gauss-Bonnet for parallel hull surfaces.

use std::f64::consts::PI;
use std::sync::Arc;

use chlab_core::surface_calculus::{
    area, hausdorff_distance, parallel_hypersurface, surface_summary, total_curvature,
    total_curvature_limit, LimitOptions,
};
use chlab_core::{AnalyticSphere, AngularGrid, ConvexBody, ModelSpace, Point, ScalarField, SurfaceOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn h3() -> ModelSpace {
    ModelSpace::constant_negative(3, -1.0).unwrap()
}

fn grid(n_phi: usize, n_theta: usize) -> Arc<AngularGrid> {
    Arc::new(AngularGrid::sphere(n_phi, n_theta).unwrap())
}

fn hull_around_origin(space: &ModelSpace, seed: u64, m: usize, radius: f64) -> ConvexBody {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let o = space.origin();
    loop {
        let vs: Vec<Point> = (0..m)
            .map(|_| space.random_point(&mut rng, &o, radius).unwrap())
            .collect();
        if let Ok(b) = ConvexBody::hull(space, vs) {
            if b.contains(&o).unwrap() {
                return b;
            }
        }
    }
}

#[test]
fn euclidean_spheres_have_total_curvature_four_pi() {
    let e = ModelSpace::euclidean(3).unwrap();
    let g = Arc::new(AngularGrid::default_for(3).unwrap());
    for r in [0.5, 2.0] {
        let s = AnalyticSphere::new(&e, e.origin(), r).unwrap();
        let total = total_curvature(&s.graph(g.clone(), SurfaceOptions::for_diameter(2.0 * r)).unwrap()).unwrap();
        assert!((total / (4.0 * PI) - 1.0).abs() < 1e-6, "r = {r}: {total}");
    }
}

#[test]
fn hyperbolic_spheres_match_closed_forms() {
    let h = h3();
    let g = Arc::new(AngularGrid::default_for(3).unwrap());
    for r in [0.5_f64, 1.0] {
        let s = AnalyticSphere::new(&h, h.origin(), r).unwrap();
        let graph = s.graph(g.clone(), SurfaceOptions::for_diameter(2.0 * r)).unwrap();
        let total = total_curvature(&graph).unwrap();
        let expected = 4.0 * PI * r.cosh().powi(2);
        assert!((total / expected - 1.0).abs() < 1e-4);
        assert!(total >= 4.0 * PI);
        let a = area(&graph).unwrap();
        assert!((a / (4.0 * PI * r.sinh().powi(2)) - 1.0).abs() < 1e-6);
    }
}

#[test]
fn off_centre_sphere_converges_at_second_order() {
    let h = h3();
    let centre = h.point_from_polar(&[0.3, -0.2, 0.25]).unwrap();
    let r = 0.8_f64;
    let exact = 4.0 * PI * r.cosh().powi(2);
    let ball: Arc<dyn ScalarField> = Arc::new(ConvexBody::ball(&h, centre, 0.1).unwrap());
    let opts = SurfaceOptions::for_diameter(2.0 * r);
    let mut errors = Vec::new();
    for n in [6, 12, 24] {
        let g = Arc::new(AngularGrid::sphere_midpoint(n, 2 * n).unwrap());
        let graph = chlab_core::RadialGraph::level_set(ball.clone(), r - 0.1, h.origin(), g, opts).unwrap();
        errors.push((total_curvature(&graph).unwrap() - exact).abs());
    }
    for w in errors.windows(2) {
        assert!(w[1] <= w[0] / 3.5 || w[1] < 1e-8, "{errors:?}");
    }
}

#[test]
fn circle_in_hyperbolic_plane() {
    let h2 = ModelSpace::constant_negative(2, -1.0).unwrap();
    let s = AnalyticSphere::new(&h2, h2.origin(), 1.0).unwrap();
    let g = Arc::new(AngularGrid::default_for(2).unwrap());
    let graph = s.graph(g, SurfaceOptions::for_diameter(2.0)).unwrap();
    let total = total_curvature(&graph).unwrap();
    assert!((total / (2.0 * PI * 1f64.cosh()) - 1.0).abs() < 1e-6);
    assert!((area(&graph).unwrap() / (2.0 * PI * 1f64.sinh()) - 1.0).abs() < 1e-6);
    // Gauss-Bonnet: boundary turning plus enclosed curvature is 2 pi.
    let enclosed = graph.enclosed_curvature_integral().unwrap();
    assert!((total + enclosed - 2.0 * PI).abs() < 1e-6);
}

#[test]
fn parallel_hull_surfaces_satisfy_gauss_bonnet() {
    // In H^3 the Gauss equation and Gauss-Bonnet give G = 4 pi + Area.
    let h = h3();
    let body = hull_around_origin(&h, 1, 6, 1.2);
    let opts = SurfaceOptions::for_diameter(body.diameter().unwrap());
    for t in [0.4, 0.1, 0.025] {
        let s = parallel_hypersurface(&body, t, grid(32, 64), opts).unwrap();
        let sum = surface_summary(&s).unwrap();
        let oracle = 4.0 * PI + sum.area;
        assert!((sum.total_curvature / oracle - 1.0).abs() < 5e-4, "t = {t}: {} vs {oracle}", sum.total_curvature);
        assert_eq!(sum.convexity_violations, 0);
        for i in 0..s.len() {
            let d = body.distance_to(&s.point(i).unwrap()).unwrap();
            assert!((d - t).abs() <= 1e-9);
        }
    }
}

#[test]
fn euclidean_parallel_hull_has_total_curvature_four_pi() {
    let e = ModelSpace::euclidean(3).unwrap();
    let body = hull_around_origin(&e, 2, 7, 1.0);
    let opts = SurfaceOptions::for_diameter(body.diameter().unwrap());
    for t in [0.2, 0.02] {
        let total = total_curvature(&parallel_hypersurface(&body, t, grid(24, 48), opts).unwrap()).unwrap();
        assert!((total / (4.0 * PI) - 1.0).abs() < 1e-3, "t = {t}: {total}");
    }
}

#[test]
fn parallel_totals_are_nondecreasing_in_t() {
    let h = h3();
    let body = hull_around_origin(&h, 4, 6, 1.0);
    let opts = SurfaceOptions::for_diameter(body.diameter().unwrap());
    let totals: Vec<f64> = [0.05, 0.1, 0.2, 0.4]
        .iter()
        .map(|t| total_curvature(&parallel_hypersurface(&body, *t, grid(16, 32), opts).unwrap()).unwrap())
        .collect();
    for w in totals.windows(2) {
        assert!(w[1] >= w[0] - 1e-6, "{totals:?}");
    }
}

#[test]
fn hull_limit_matches_boundary_area() {
    let h = h3();
    let body = hull_around_origin(&h, 5, 6, 1.0);
    let opts = SurfaceOptions::for_diameter(body.diameter().unwrap());
    let lim = total_curvature_limit(&body, grid(24, 48), opts, &LimitOptions::default()).unwrap();
    assert!(lim.monotone);
    // The limit of 4 pi + Area(Gamma_t) as t -> 0, extrapolated linearly.
    let a = |t: f64| area(&parallel_hypersurface(&body, t, grid(24, 48), opts).unwrap()).unwrap();
    let (a1, a2) = (a(0.02), a(0.01));
    let boundary_area = 2.0 * a2 - a1;
    assert!((lim.value - (4.0 * PI + boundary_area)).abs() < 2e-2, "{} vs {}", lim.value, 4.0 * PI + boundary_area);
    assert!(lim.value >= 4.0 * PI);
}

#[test]
fn hyperbolic_hull_curve_gauss_bonnet() {
    let h2 = ModelSpace::constant_negative(2, -1.0).unwrap();
    let body = hull_around_origin(&h2, 6, 7, 1.0);
    let opts = SurfaceOptions::for_diameter(body.diameter().unwrap());
    let g = Arc::new(AngularGrid::default_for(2).unwrap());
    let s = parallel_hypersurface(&body, 0.05, g, opts).unwrap();
    let sum = surface_summary(&s).unwrap();
    let enclosed_area = -s.enclosed_curvature_integral().unwrap();
    let expected = 2.0 * PI + enclosed_area;
    assert!((sum.total_curvature / expected - 1.0).abs() < 5e-3, "{} vs {expected}", sum.total_curvature);
}

#[test]
fn concentric_spheres_hausdorff_distance() {
    let h = h3();
    let g = grid(12, 24);
    let a = AnalyticSphere::new(&h, h.origin(), 0.5).unwrap().graph(g.clone(), SurfaceOptions::default()).unwrap();
    let b = AnalyticSphere::new(&h, h.origin(), 0.8).unwrap().graph(g, SurfaceOptions::default()).unwrap();
    assert!((hausdorff_distance(&a, &b).unwrap() - 0.3).abs() < 1e-9);
    assert!(hausdorff_distance(&a, &a).unwrap() < 1e-12);
}

#[test]
fn surface_csv_has_one_row_per_direction() {
    let h = h3();
    let g = grid(6, 12);
    let graph = AnalyticSphere::new(&h, h.origin(), 1.0)
        .unwrap()
        .graph(g.clone(), SurfaceOptions::for_diameter(2.0))
        .unwrap();
    let mut buf = Vec::new();
    graph.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header[0], "index");
    assert!(header.contains(&"kappa2") && header.contains(&"gk"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), g.len());
    let gk = header.iter().position(|h| *h == "gk").unwrap();
    let expected = 1.0 / 1.0_f64.tanh().powi(2);
    for row in rows {
        assert_eq!(row.len(), header.len());
        assert!((row[gk] / expected - 1.0).abs() < 1e-6);
    }
}
