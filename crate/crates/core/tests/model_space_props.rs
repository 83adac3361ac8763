//! Geometric invariants of the model spaces, checked against independent
//! oracles (numerical shooting, finite-difference curvature, recursions).

use std::f64::consts::PI;

use chlab_core::model_space::lorentz;
use chlab_core::{unit_sphere_volume, ModelSpace, Point, TangentVector, Vector, WarpProfile};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn hyperbolic(n: usize) -> ModelSpace {
    ModelSpace::constant_negative(n, -1.0).unwrap()
}

fn warped(c: f64) -> ModelSpace {
    ModelSpace::warped(3, WarpProfile::new(1.0, c).unwrap()).unwrap()
}

fn spaces() -> Vec<ModelSpace> {
    vec![
        ModelSpace::euclidean(3).unwrap(),
        hyperbolic(2),
        hyperbolic(3),
        ModelSpace::constant_negative(5, -0.3).unwrap(),
        warped(0.05),
    ]
}

fn is_warped(s: &ModelSpace) -> bool {
    matches!(s.kind(), chlab_core::SpaceKind::Warped(_))
}

#[test]
fn exp_log_roundtrip() {
    for space in spaces() {
        let pairs = if is_warped(&space) { 60 } else { 1000 };
        let max_len = if is_warped(&space) { 2.5 } else { 10.0 };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut worst = 0.0_f64;
        for _ in 0..pairs {
            let p = space.random_point(&mut rng, &space.origin(), 2.0).unwrap();
            let len = rng.gen::<f64>() * max_len;
            let v = space.random_unit(&mut rng, &p).scaled(len);
            let q = space.exp_map(&p, &v).unwrap();
            let back = space.log_map(&p, &q).unwrap();
            let err = (back.components - v.components).norm() / (1.0 + len);
            worst = worst.max(err);
            // |log_p q| = dist(p, q) = |v|
            let d = space.distance(&p, &q).unwrap();
            assert!((d - len).abs() <= 1e-9 * (1.0 + len), "{space:?}: {d} vs {len}");
        }
        assert!(worst <= 1e-9, "{:?}: roundtrip error {worst:e}", space.kind());
    }
}

#[test]
fn metric_axioms_on_random_triples() {
    for space in spaces() {
        let count = if is_warped(&space) { 40 } else { 1000 };
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..count {
            let o = space.origin();
            let p = space.random_point(&mut rng, &o, 2.0).unwrap();
            let q = space.random_point(&mut rng, &o, 2.0).unwrap();
            let r = space.random_point(&mut rng, &o, 2.0).unwrap();
            let pq = space.distance(&p, &q).unwrap();
            let qp = space.distance(&q, &p).unwrap();
            let qr = space.distance(&q, &r).unwrap();
            let pr = space.distance(&p, &r).unwrap();
            assert!((pq - qp).abs() <= 1e-10 * (1.0 + pq));
            assert!(pr <= pq + qr + 1e-10);
            assert!(pq >= 0.0);
            assert_eq!(space.distance(&p, &p).unwrap(), 0.0);
        }
    }
}

#[test]
fn transport_is_isometry_fixing_geodesic_tangent() {
    for space in spaces() {
        let count = if is_warped(&space) { 30 } else { 1000 };
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..count {
            let o = space.origin();
            let p = space.random_point(&mut rng, &o, 2.0).unwrap();
            let q = space.random_point(&mut rng, &o, 2.0).unwrap();
            let v = space.random_unit(&mut rng, &p).scaled(1.3);
            let w = space.random_unit(&mut rng, &p).scaled(0.7);
            let tv = space.parallel_transport(&p, &q, &v).unwrap();
            let tw = space.parallel_transport(&p, &q, &w).unwrap();
            assert!((space.inner(&tv, &tw) - space.inner(&v, &w)).abs() <= 1e-9);
            assert!((space.norm(&tv) - space.norm(&v)).abs() <= 1e-9);

            let u = space.log_map(&p, &q).unwrap();
            let len = space.norm(&u);
            if len < 1e-6 {
                continue;
            }
            let tu = space.parallel_transport(&p, &q, &u.scaled(1.0 / len)).unwrap();
            let at_q = space.log_map(&q, &p).unwrap();
            let tangent_q = at_q.scaled(-1.0 / space.norm(&at_q));
            assert!(
                (tu.components - tangent_q.components).norm() <= 1e-9 * (1.0 + q.coords.norm()),
                "{:?}",
                space.kind()
            );
        }
    }
}

#[test]
fn euclidean_transport_keeps_components() {
    let e = ModelSpace::euclidean(3).unwrap();
    let p = e.point(&[0.2, -1.0, 3.0]).unwrap();
    let q = e.point(&[4.0, 1.0, 0.5]).unwrap();
    let v = e.tangent(&p, &[0.3, 0.1, -0.2]).unwrap();
    assert_eq!(
        e.parallel_transport(&p, &q, &v).unwrap().components,
        v.components
    );
}

/// Oracle: integrate the hyperboloid geodesic equation x'' = <x',x'>_L x / a^2
/// with RK4 and shoot with Newton from a chord-based guess.
fn shoot_distance(space: &ModelSpace, a: f64, p: &Point, q: &Point) -> f64 {
    let n1 = p.coords.len();
    let endpoint = |v: &Vector| -> Vector {
        let steps = 4000;
        let h = 1.0 / steps as f64;
        let f = |x: &Vector, u: &Vector| -> Vector { *x * (lorentz(u, u) / (a * a)) };
        let (mut x, mut u) = (p.coords, *v);
        for _ in 0..steps {
            let k1x = u;
            let k1u = f(&x, &u);
            let k2x = u.axpy(0.5 * h, &k1u);
            let k2u = f(&x.axpy(0.5 * h, &k1x), &k2x);
            let k3x = u.axpy(0.5 * h, &k2u);
            let k3u = f(&x.axpy(0.5 * h, &k2x), &k3x);
            let k4x = u.axpy(h, &k3u);
            let k4u = f(&x.axpy(h, &k3x), &k4x);
            x = x
                .axpy(h / 6.0, &k1x)
                .axpy(h / 3.0, &k2x)
                .axpy(h / 3.0, &k3x)
                .axpy(h / 6.0, &k4x);
            u = u
                .axpy(h / 6.0, &k1u)
                .axpy(h / 3.0, &k2u)
                .axpy(h / 3.0, &k3u)
                .axpy(h / 6.0, &k4u);
        }
        x
    };
    // Tangent basis at p; unknowns are frame coordinates.
    let frame = space.standard_frame(p);
    let dim = frame.vectors.len();
    let to_vec = |c: &[f64]| -> Vector {
        let mut acc = Vector::zeros(n1);
        for (ci, e) in c.iter().zip(&frame.vectors) {
            acc = acc.axpy(*ci, &e.components);
        }
        acc
    };
    let chord = space.project_tangent(p, q.coords - p.coords);
    let mut c: Vec<f64> = frame
        .vectors
        .iter()
        .map(|e| space.inner(e, &chord))
        .collect();
    for _ in 0..50 {
        let res = endpoint(&to_vec(&c)) - q.coords;
        if res.norm() < 1e-12 {
            break;
        }
        let mut jac = DMatrix::<f64>::zeros(n1, dim);
        for j in 0..dim {
            let mut cj = c.clone();
            cj[j] += 1e-7;
            let col = (endpoint(&to_vec(&cj)) - q.coords - res) * 1e7;
            for i in 0..n1 {
                jac[(i, j)] = col[i];
            }
        }
        let rhs = nalgebra::DVector::from_column_slice(res.as_slice());
        let delta = jac.svd(true, true).solve(&rhs, 1e-14).unwrap();
        for j in 0..dim {
            c[j] -= delta[j];
        }
    }
    c.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[test]
fn hyperbolic_distance_matches_shooting_oracle() {
    let h = hyperbolic(3);
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..10 {
        let p = h.random_point(&mut rng, &h.origin(), 1.5).unwrap();
        let q = h.random_point(&mut rng, &h.origin(), 1.5).unwrap();
        let closed = (-lorentz(&p.coords, &q.coords)).acosh();
        let shot = shoot_distance(&h, 1.0, &p, &q);
        assert!((closed - shot).abs() <= 1e-9, "{closed} vs {shot}");
        assert!((h.distance(&p, &q).unwrap() - closed).abs() <= 1e-9);
    }
}

#[test]
fn curvature_rescaling_halves_distances() {
    let h1 = hyperbolic(3);
    let h4 = ModelSpace::constant_negative(3, -4.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..20 {
        let p = h1.random_point(&mut rng, &h1.origin(), 2.0).unwrap();
        let q = h1.random_point(&mut rng, &h1.origin(), 2.0).unwrap();
        let p4 = h4.point((p.coords * 0.5).as_slice()).unwrap();
        let q4 = h4.point((q.coords * 0.5).as_slice()).unwrap();
        let d1 = h1.distance(&p, &q).unwrap();
        let d4 = h4.distance(&p4, &q4).unwrap();
        assert!((d4 - d1 / 2.0).abs() <= 1e-12);
        let shot = shoot_distance(&h4, 0.5, &p4, &q4);
        assert!((shot - d4).abs() <= 1e-9);
    }
}

/// Warped chart metric built straight from phi.
fn warped_metric(prof: &WarpProfile, x: &[f64; 3]) -> [[f64; 3]; 3] {
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    let s = (prof.phi(r) / r).powi(2);
    let mu = (1.0 - s) / (r * r);
    let mut g = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            g[i][j] = mu * x[i] * x[j] + if i == j { s } else { 0.0 };
        }
    }
    g
}

/// Riemann tensor R_{iklm} from second derivatives of the metric and
/// Christoffel symbols (central differences).
fn fd_riemann(prof: &WarpProfile, x: [f64; 3]) -> [[[[f64; 3]; 3]; 3]; 3] {
    let shift = |dx: &[(usize, f64)]| {
        let mut y = x;
        for (i, d) in dx {
            y[*i] += d;
        }
        warped_metric(prof, &y)
    };
    let h1 = 1e-5;
    let h2 = 1e-3;
    let g = warped_metric(prof, &x);
    let mut dg = [[[0.0; 3]; 3]; 3]; // dg[c][a][b] = d_c g_ab
    for c in 0..3 {
        let p = shift(&[(c, h1)]);
        let m = shift(&[(c, -h1)]);
        for a in 0..3 {
            for b in 0..3 {
                dg[c][a][b] = (p[a][b] - m[a][b]) / (2.0 * h1);
            }
        }
    }
    let mut ddg = [[[[0.0; 3]; 3]; 3]; 3]; // ddg[c][d][a][b]
    for c in 0..3 {
        for d in 0..3 {
            let pp = shift(&[(c, h2), (d, h2)]);
            let pm = shift(&[(c, h2), (d, -h2)]);
            let mp = shift(&[(c, -h2), (d, h2)]);
            let mm = shift(&[(c, -h2), (d, -h2)]);
            for a in 0..3 {
                for b in 0..3 {
                    ddg[c][d][a][b] = (pp[a][b] - pm[a][b] - mp[a][b] + mm[a][b]) / (4.0 * h2 * h2);
                }
            }
        }
    }
    let gm = nalgebra::Matrix3::from_fn(|i, j| g[i][j]);
    let gi = gm.try_inverse().unwrap();
    // Gamma^n_{kl}
    let mut gamma = [[[0.0; 3]; 3]; 3];
    for nn in 0..3 {
        for k in 0..3 {
            for l in 0..3 {
                let mut acc = 0.0;
                for p in 0..3 {
                    acc += gi[(nn, p)] * 0.5 * (dg[k][p][l] + dg[l][p][k] - dg[p][k][l]);
                }
                gamma[nn][k][l] = acc;
            }
        }
    }
    let mut r = [[[[0.0; 3]; 3]; 3]; 3];
    for i in 0..3 {
        for k in 0..3 {
            for l in 0..3 {
                for m in 0..3 {
                    let mut v = 0.5
                        * (ddg[k][l][i][m] + ddg[i][m][k][l] - ddg[k][m][i][l] - ddg[i][l][k][m]);
                    for nn in 0..3 {
                        for p in 0..3 {
                            v += g[nn][p]
                                * (gamma[nn][k][l] * gamma[p][i][m] - gamma[nn][k][m] * gamma[p][i][l]);
                        }
                    }
                    r[i][k][l][m] = v;
                }
            }
        }
    }
    r
}

fn contract(r: &[[[[f64; 3]; 3]; 3]; 3], v: [&Vector; 4]) -> f64 {
    let mut acc = 0.0;
    for i in 0..3 {
        for k in 0..3 {
            for l in 0..3 {
                for m in 0..3 {
                    acc += r[i][k][l][m] * v[0][i] * v[1][k] * v[2][l] * v[3][m];
                }
            }
        }
    }
    acc
}

#[test]
fn warped_curvature_matches_finite_difference_tensor() {
    let prof = WarpProfile::new(1.0, 0.05).unwrap();
    let space = ModelSpace::warped(3, prof).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for &radius in &[0.6, 1.5, 2.2] {
        let dir = space.random_unit(&mut rng, &space.origin());
        let x = dir.components * radius;
        let p = space.point(x.as_slice()).unwrap();
        let r = fd_riemann(&prof, [x[0], x[1], x[2]]);
        // Random orthonormal frame.
        let a = space.random_unit(&mut rng, &p);
        let frame = space.complete_frame(&p, &[a]).unwrap();
        let e = &frame.vectors;
        for (i, j, k, l) in [(0, 1, 0, 1), (0, 2, 0, 2), (1, 2, 1, 2), (0, 1, 0, 2), (0, 1, 1, 2), (0, 2, 1, 2)] {
            let analytic = space.riemann_component(&frame, i, j, k, l).unwrap();
            let oracle = contract(
                &r,
                [&e[i].components, &e[j].components, &e[k].components, &e[l].components],
            );
            assert!(
                (analytic - oracle).abs() <= 1e-5,
                "r={radius} R{i}{j}{k}{l}: {analytic} vs {oracle}"
            );
        }
    }
    // Radial plane at r = 1.5: -phi''/phi from the oracle.
    let x = [0.0, 0.0, 1.5];
    let r = fd_riemann(&prof, x);
    let p = space.point(&x).unwrap();
    let radial = space.tangent(&p, &[0.0, 0.0, 1.0]).unwrap();
    let tang = space.tangent(&p, &[1.0, 0.0, 0.0]).unwrap();
    let tang = tang.scaled(1.0 / space.norm(&tang));
    let k_fd = contract(
        &r,
        [&radial.components, &tang.components, &radial.components, &tang.components],
    );
    let k = space.sectional_curvature(&radial, &tang).unwrap();
    assert!((k - k_fd).abs() <= 1e-5);
    assert!((k + prof.ddphi(1.5) / prof.phi(1.5)).abs() <= 1e-12);
}

#[test]
fn rotated_frame_transforms_curvature_operator() {
    let prof = WarpProfile::new(1.0, 0.05).unwrap();
    let space = ModelSpace::warped(3, prof).unwrap();
    let p = space.point(&[0.3, 1.1, 0.8]).unwrap();
    let f0 = space.complete_frame(&p, &[space.radial_unit(&space.origin(), &p).unwrap()]).unwrap();
    let m0 = space.curvature_operator_matrix(&f0).unwrap();
    // Polar frame: curvature operator is diagonal.
    assert!(m0.max_mixed() < 1e-12);
    // Rotate e_0, e_1 by 0.6 rad and e_1, e_2 by 0.4 rad.
    let rot = |a: f64, i: usize, j: usize| {
        let mut o = nalgebra::Matrix3::<f64>::identity();
        o[(i, i)] = a.cos();
        o[(j, j)] = a.cos();
        o[(i, j)] = -a.sin();
        o[(j, i)] = a.sin();
        o
    };
    let o = rot(0.6, 0, 1) * rot(0.4, 1, 2);
    let vectors: Vec<TangentVector> = (0..3)
        .map(|b| {
            let mut acc = f0.vectors[0].scaled(0.0);
            for a in 0..3 {
                acc = acc.axpy(o[(a, b)], &f0.vectors[a]);
            }
            acc
        })
        .collect();
    let f1 = space.frame(&p, vectors).unwrap();
    let m1 = space.curvature_operator_matrix(&f1).unwrap();
    // Induced orthogonal map on 2-vectors: (e'_i ^ e'_j) = sum O_ai O_bj e_a ^ e_b.
    let pairs = &m0.pairs;
    let big = DMatrix::from_fn(3, 3, |row, col| {
        let (a, b) = pairs[row];
        let (i, j) = pairs[col];
        o[(a, i)] * o[(b, j)] - o[(b, i)] * o[(a, j)]
    });
    let predicted = big.transpose() * &m0.entries * &big;
    assert!((predicted - &m1.entries).amax() < 1e-12);
    assert!(m1.max_mixed() > 1e-3, "mixing frame must expose mixed terms");
    assert!(m1.symmetry_residual() < 1e-12);
}

#[test]
fn hyperbolic_operator_is_scalar_in_random_frames() {
    let h = ModelSpace::constant_negative(4, -0.7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..100 {
        let p = h.random_point(&mut rng, &h.origin(), 3.0).unwrap();
        let a = h.random_unit(&mut rng, &p);
        let b = h.random_unit(&mut rng, &p);
        let frame = h.complete_frame(&p, &[a, b]).unwrap_or_else(|_| h.complete_frame(&p, &[a]).unwrap());
        let m = h.curvature_operator_matrix(&frame).unwrap();
        let eye = DMatrix::<f64>::identity(6, 6) * -0.7;
        assert!((m.entries - eye).amax() < 1e-10);
    }
}

#[test]
fn cartan_hadamard_admission() {
    let spaces = [
        ModelSpace::euclidean(3).unwrap(),
        hyperbolic(3),
        ModelSpace::warped(3, WarpProfile::new(1.0, 0.05).unwrap()).unwrap(),
        ModelSpace::warped(3, WarpProfile::new(0.5, 2.0).unwrap()).unwrap(),
        ModelSpace::warped(4, WarpProfile::new(1.0, 0.3).unwrap()).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    for space in &spaces {
        for _ in 0..200 {
            let p = space.random_point(&mut rng, &space.origin(), 4.0).unwrap();
            let u = space.random_unit(&mut rng, &p);
            let v = space.random_unit(&mut rng, &p);
            if let Ok(k) = space.sectional_curvature(&u, &v) {
                assert!(k <= 1e-8, "{:?}: K = {k}", space.kind());
            }
            let f = space.complete_frame(&p, &[u]).unwrap();
            for (i, j, k, l) in [(0, 1, 0, 1), (0, 1, 0, 2), (1, 2, 0, 1)] {
                let r = space.riemann_component(&f, i, j, k, l).unwrap();
                assert!((r + space.riemann_component(&f, j, i, k, l).unwrap()).abs() < 1e-12);
                assert!((r + space.riemann_component(&f, i, j, l, k).unwrap()).abs() < 1e-12);
                assert!((r - space.riemann_component(&f, k, l, i, j).unwrap()).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn sphere_volume_recursion() {
    // |S^{n-1}| = 2 pi |S^{n-3}| / (n - 2)
    let mut table = vec![0.0, 0.0, 2.0 * PI, 4.0 * PI];
    for n in 4..=10 {
        let v = 2.0 * PI * table[n - 2] / (n as f64 - 2.0);
        table.push(v);
    }
    for n in 2..=10 {
        let got = unit_sphere_volume(n).unwrap();
        assert!((got - table[n]).abs() <= 1e-12 * table[n], "n={n}");
    }
    assert!((unit_sphere_volume(4).unwrap() - 2.0 * PI * PI).abs() < 1e-12);
}

#[test]
fn pure_sinh_warp_matches_hyperboloid_distances() {
    let w = warped(0.0);
    let h = hyperbolic(3);
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for _ in 0..10 {
        let x = w.random_point(&mut rng, &w.origin(), 2.0).unwrap();
        let y = w.random_point(&mut rng, &w.origin(), 2.0).unwrap();
        let lift = |p: &Point| {
            let r = p.coords.norm();
            let f = if r > 0.0 { r.sinh() / r } else { 1.0 };
            h.point(&[r.cosh(), p.coords[0] * f, p.coords[1] * f, p.coords[2] * f]).unwrap()
        };
        let dw = w.distance(&x, &y).unwrap();
        let dh = h.distance(&lift(&x), &lift(&y)).unwrap();
        assert!((dw - dh).abs() < 1e-9, "{dw} vs {dh}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hyperboloid_points_stay_on_sheet(
        coords in proptest::collection::vec(-3.0f64..3.0, 3),
        vel in proptest::collection::vec(-4.0f64..4.0, 4),
    ) {
        let h = hyperbolic(3);
        let p = h.point_from_polar(&coords).unwrap();
        let v = h.tangent(&p, &vel).unwrap();
        prop_assert!(lorentz(&p.coords, &v.components).abs() < 1e-12 * (1.0 + p.coords.norm_squared()));
        let q = h.exp_map(&p, &v).unwrap();
        prop_assert!((lorentz(&q.coords, &q.coords) + 1.0).abs() <= 1e-12 * q.coords.norm_squared().max(1.0));
        prop_assert!(q.coords[0] > 0.0);
    }

    #[test]
    fn log_is_nonexpansive(
        seed in 0u64..10_000,
    ) {
        let h = hyperbolic(3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let o = h.origin();
        let p = h.random_point(&mut rng, &o, 2.5).unwrap();
        let a = h.random_point(&mut rng, &o, 2.5).unwrap();
        let b = h.random_point(&mut rng, &o, 2.5).unwrap();
        let la = h.log_map(&p, &a).unwrap();
        let lb = h.log_map(&p, &b).unwrap();
        let diff = la.axpy(-1.0, &lb);
        prop_assert!(h.norm(&diff) <= h.distance(&a, &b).unwrap() * (1.0 + 1e-8) + 1e-12);
    }
}
