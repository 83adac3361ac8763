//! The interpolant, adapted frames, comparison integrands and coarea
//! integration, checked on concentric balls (where everything is radial)
//! and on random hull pairs (where identities must still hold).

use std::f64::consts::PI;
use std::sync::Arc;

use chlab_core::comparison::{
    adapted_frame, cofactors, comparison_identity_report, comparison_integrands, evaluate_interpolant,
    extract_level_set, f_lambda, grad_norm_derivative, integrands_in_frame, region_integral,
    ComparisonOptions, InterpolantField, RegionOptions,
};
use chlab_core::surface_calculus::{hausdorff_distance, LimitOptions};
use chlab_core::{AngularGrid, ConvexBody, ModelSpace, Point, ScalarField, SurfaceOptions, WarpProfile};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn h3() -> ModelSpace {
    ModelSpace::constant_negative(3, -1.0).unwrap()
}

fn concentric(space: &ModelSpace, r1: f64, r2: f64, lambda: f64) -> InterpolantField {
    let o = space.origin();
    InterpolantField::new(
        ConvexBody::ball(space, o, r1).unwrap(),
        ConvexBody::ball(space, o, r2).unwrap(),
        lambda,
    )
    .unwrap()
}

fn hull_pair(space: &ModelSpace, seed: u64, lambda: f64) -> InterpolantField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let o = space.origin();
    loop {
        let outer: Vec<Point> = (0..6).map(|_| space.random_point(&mut rng, &o, 1.2).unwrap()).collect();
        let inner: Vec<Point> = (0..4).map(|_| space.random_point(&mut rng, &o, 0.4).unwrap()).collect();
        let (Ok(a), Ok(b)) = (ConvexBody::hull(space, inner), ConvexBody::hull(space, outer)) else {
            continue;
        };
        if let Ok(f) = InterpolantField::new(a, b, lambda) {
            return f;
        }
    }
}

/// A random point at distance between `lo` and `hi` outside `body`.
fn outside(space: &ModelSpace, body: &ConvexBody, rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Point {
    loop {
        let p = space.random_point(rng, &space.origin(), 3.0).unwrap();
        let d = body.distance_to(&p).unwrap();
        if d > lo && d < hi {
            return p;
        }
    }
}

#[test]
fn cofactors_are_explicit_products() {
    let (d, off) = cofactors(&[2.0, 3.0]);
    assert_eq!(d, vec![3.0, 2.0]);
    assert_eq!(off[(0, 1)], 1.0);
    assert_eq!(off[(1, 0)], 1.0);
    let k = [0.5, 0.0, 4.0, 1.5];
    let (d, off) = cofactors(&k);
    let gk: f64 = k.iter().product();
    for i in 0..4 {
        assert!((k[i] * d[i] - gk).abs() < 1e-15);
        for j in 0..4 {
            if i != j {
                assert!((off[(i, j)] * k[i] * k[j] - gk).abs() < 1e-15);
            }
        }
    }
    // The flat direction keeps a nonzero cofactor.
    assert_eq!(d[1], 3.0);
}

#[test]
fn interpolant_examples() {
    let h = h3();
    let f0 = concentric(&h, 0.5, 1.0, 0.0);
    let p = h.point_from_polar(&[1.3, 0.0, 0.0]).unwrap();
    let v = evaluate_interpolant(&f0, &p).unwrap();
    assert!((v.value - 0.09).abs() < 1e-12);
    assert!((h.norm(&v.grad) - 0.6).abs() < 1e-12);

    let f = concentric(&h, 0.5, 1.0, 0.3);
    let q = h.point_from_polar(&[0.0, 0.8, 0.0]).unwrap();
    assert!((f.value(&q).unwrap() - 0.3 * 0.3).abs() < 1e-12);
    let s = 1.7;
    let r = h.point_from_polar(&[0.0, 0.0, s]).unwrap();
    let expected = 0.3 * (s - 0.5) + (s - 1.0) * (s - 1.0);
    assert!((f.value(&r).unwrap() - expected).abs() < 1e-12);

    let inside = h.point_from_polar(&[0.1, 0.0, 0.0]).unwrap();
    assert!(evaluate_interpolant(&f, &inside).is_err());
}

#[test]
fn nesting_is_enforced() {
    let h = h3();
    let o = h.origin();
    let big = ConvexBody::ball(&h, o, 1.0).unwrap();
    let small = ConvexBody::ball(&h, o, 0.5).unwrap();
    assert!(InterpolantField::new(big, small, 0.1).is_err());
}

#[test]
fn gradient_norm_identity_on_hull_pairs() {
    let h = h3();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for seed in 0..3 {
        let f = hull_pair(&h, seed, 0.05);
        for _ in 0..100 {
            let p = outside(&h, f.outer(), &mut rng, 1e-3, 1.5);
            let v = evaluate_interpolant(&f, &p).unwrap();
            assert!(v.norm_identity_residual.abs() <= 1e-8);
            let (a, b) = (v.grad_outer.unwrap(), v.grad_inner.unwrap());
            assert!(h.inner(&a, &b) >= -1e-9);
            assert!(h.norm(&v.grad) >= 2.0 * v.d_outer * (1.0 - 1e-9));
        }
    }
}

#[test]
fn adapted_frames_on_concentric_spheres() {
    for (space, curvature) in [
        (h3(), (|r: f64| 1.0 / r.tanh()) as fn(f64) -> f64),
        (ModelSpace::euclidean(3).unwrap(), (|r: f64| 1.0 / r) as fn(f64) -> f64),
    ] {
        let f = concentric(&space, 0.5, 1.0, 0.0);
        let r = 1.4;
        let p = space.point_from_polar(&[0.3 * r, -0.4 * r, (0.75f64).sqrt() * r]).unwrap();
        let frame = adapted_frame(&f, &p, 1e-4).unwrap();
        for k in &frame.kappas {
            assert!((k - curvature(r)).abs() < 1e-7, "{k} vs {}", curvature(r));
        }
        assert!(frame.gram_residual(&space) <= 1e-8);
        for j in 0..2 {
            assert!(grad_norm_derivative(&f, &frame, j, 1e-4).unwrap().abs() < 1e-8);
        }
    }
}

#[test]
fn grad_norm_derivative_richardson_on_hulls() {
    let h = h3();
    let f = hull_pair(&h, 3, 0.05);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    while checked < 10 {
        let p = outside(&h, f.outer(), &mut rng, 0.05, 1.0);
        let frame = adapted_frame(&f, &p, 1e-4).unwrap();
        if frame.halvings > 0 {
            continue;
        }
        for j in 0..2 {
            let coarse = grad_norm_derivative(&f, &frame, j, 1e-3).unwrap();
            let fine = grad_norm_derivative(&f, &frame, j, 2.5e-4).unwrap();
            assert!((coarse - fine).abs() < 1e-5, "{coarse} vs {fine}");
        }
        checked += 1;
    }
}

#[test]
fn constant_curvature_integrands() {
    let h = h3();
    let f = hull_pair(&h, 7, 0.02);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let p = outside(&h, f.outer(), &mut rng, 0.01, 1.0);
        let s = comparison_integrands(&f, &p, 1e-4).unwrap();
        assert!(s.term2.abs() < 1e-12);
        let sum: f64 = s.cofactor_diag.iter().sum();
        assert!((s.term1 + sum).abs() < 1e-10 * (1.0 + sum.abs()));
        assert!(f_lambda(&f, &p, 1e-4).unwrap().abs() < 1e-12);
    }
}

#[test]
fn integrands_are_frame_permutation_invariant() {
    let w = ModelSpace::warped(3, WarpProfile::new(1.0, 0.05).unwrap()).unwrap();
    let o = w.origin();
    let inner = ConvexBody::ball(&w, w.point_from_polar(&[0.1, 0.0, 0.0]).unwrap(), 0.3).unwrap();
    let outer = ConvexBody::ball(&w, o, 0.9).unwrap();
    let f = InterpolantField::new(inner, outer, 0.05).unwrap();
    let p = w.point_from_polar(&[0.2, 1.1, 0.4]).unwrap();
    let frame = adapted_frame(&f, &p, 1e-4).unwrap();
    let a = integrands_in_frame(&f, &frame, 1e-4).unwrap();
    let mut swapped = frame.clone();
    swapped.tangents.swap(0, 1);
    swapped.kappas.swap(0, 1);
    let b = integrands_in_frame(&f, &swapped, 1e-4).unwrap();
    assert!((a.term1 - b.term1).abs() <= 1e-10);
    assert!((a.term2 - b.term2).abs() <= 1e-10);
    // Off the constant-curvature ball the mixed terms are genuinely present.
    assert!(a.r_ijin.amax() > 1e-6);
}

#[test]
fn f_lambda_vanishes_between_the_bodies() {
    let w = ModelSpace::warped(3, WarpProfile::new(1.0, 0.05).unwrap()).unwrap();
    let inner = ConvexBody::ball(&w, w.origin(), 0.4).unwrap();
    let outer = ConvexBody::ball(&w, w.point_from_polar(&[0.1, 0.0, 0.0]).unwrap(), 1.3).unwrap();
    let f = InterpolantField::new(inner, outer, 0.01).unwrap();
    for x in [[0.0, 0.9, 0.3], [-0.6, 0.2, 0.5], [0.2, -0.3, -0.95]] {
        let p = w.point_from_polar(&x).unwrap();
        assert_eq!(f.outer().distance_to(&p).unwrap(), 0.0);
        assert!(f_lambda(&f, &p, 1e-4).unwrap().abs() < 1e-8);
    }
}

#[test]
fn level_sets_of_the_interpolant() {
    let h = h3();
    let grid = Arc::new(AngularGrid::sphere(8, 16).unwrap());
    let f = concentric(&h, 0.5, 1.0, 0.2);
    let c = 0.4;
    let s = extract_level_set(&f, c, h.origin(), grid.clone(), SurfaceOptions::default()).unwrap();
    // Scalar oracle: 0.2 (s - 0.5) + (s - 1)^2 = c for s > 1.
    let mut lo: f64 = 1.0;
    let mut hi: f64 = 3.0;
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if 0.2 * (m - 0.5) + (m - 1.0).powi(2) < c {
            lo = m;
        } else {
            hi = m;
        }
    }
    for r in s.radii() {
        assert!((r - lo).abs() < 1e-9);
    }
    // lambda = 0, c = eps^2 reproduces the parallel surface at eps.
    let f0 = hull_pair(&h, 11, 0.0);
    let eps: f64 = 0.1;
    let base = f0.inner().interior_point();
    let a = extract_level_set(&f0, eps * eps, base, grid.clone(), SurfaceOptions::default()).unwrap();
    let mut opts = SurfaceOptions::default();
    opts.adaptive = None;
    let b = chlab_core::RadialGraph::level_set(Arc::new(f0.outer().clone()), eps, base, grid, opts).unwrap();
    assert!(hausdorff_distance(&a, &b).unwrap() < 1e-8);
}

#[test]
fn region_volume_between_spheres() {
    let h = h3();
    let f = concentric(&h, 0.5, 1.0, 1.0);
    let opts = RegionOptions {
        base: h.point_from_polar(&[0.1, 0.0, 0.05]).unwrap(),
        grid: Arc::new(AngularGrid::sphere(16, 32).unwrap()),
        surface: SurfaceOptions::default(),
        order: 8,
    };
    let field: Arc<dyn ScalarField> = Arc::new(f);
    let vol = region_integral(field.clone(), (0.0, 0.5), &opts, |_| Ok(1.0)).unwrap();
    let v = |s: f64| (2.0 * s).sinh() / 4.0 - s / 2.0;
    let exact = 4.0 * PI * (v(1.0) - v(0.5));
    assert!((vol / exact - 1.0).abs() < 1e-8, "{vol} vs {exact}");
    assert_eq!(region_integral(field, (0.3, 0.3), &opts, |_| Ok(1.0)).unwrap(), 0.0);
}

#[test]
fn comparison_identity_for_concentric_spheres() {
    let h = h3();
    let f = concentric(&h, 0.5, 1.0, 1.0);
    let opts = ComparisonOptions {
        level: 0.5,
        base: Some(h.point_from_polar(&[0.1, 0.05, -0.08]).unwrap()),
        grid: Arc::new(AngularGrid::sphere(12, 24).unwrap()),
        surface: SurfaceOptions::for_diameter(2.0),
        order: 16,
        refinements: 1,
        limit: LimitOptions::default(),
    };
    let r = comparison_identity_report(&f, &opts).unwrap();
    let exact = 4.0 * PI * (1f64.cosh().powi(2) - 0.5f64.cosh().powi(2));
    assert!((r.rhs_term1 / exact - 1.0).abs() < 1e-6);
    assert!(r.rhs_term2.abs() < 1e-10);
    assert!(r.residual <= 5e-3 * r.lhs);
    assert!(r.refinement_history[1].residual < r.refinement_history[0].residual);
    assert!(r.inequality_margin >= 0.0);
}

#[test]
fn euclidean_comparison_is_trivial() {
    let e = ModelSpace::euclidean(3).unwrap();
    let f = concentric(&e, 0.5, 1.0, 1.0);
    let opts = ComparisonOptions {
        level: 0.5,
        base: None,
        grid: Arc::new(AngularGrid::sphere(8, 16).unwrap()),
        surface: SurfaceOptions::for_diameter(2.0),
        order: 8,
        refinements: 0,
        limit: LimitOptions::default(),
    };
    let r = comparison_identity_report(&f, &opts).unwrap();
    assert!(r.lhs.abs() < 1e-8);
    assert!(r.rhs_term1.abs() < 1e-12 && r.rhs_term2.abs() < 1e-12);
}
