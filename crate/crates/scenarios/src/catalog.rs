//! The scenario catalog and its default desk-scale configs.

use std::collections::BTreeMap;

use crate::config::{BodySpec, Numerics, ScenarioConfig, SpaceSpec, SCHEMA_VERSION};

pub struct Entry {
    pub name: &'static str,
    pub summary: &'static str,
    /// The statement the scenario checks on instances.
    pub claim: &'static str,
    /// Tolerance keys every config for this scenario must set.
    pub tolerances: &'static [&'static str],
}

pub const CATALOG: &[Entry] = &[
    Entry {
        name: "sphere_euclidean",
        summary: "total curvature of Euclidean spheres",
        claim: "G(S_r) = |S^{n-1}| (equality case of G >= |S^{n-1}|)",
        tolerances: &["rel_err"],
    },
    Entry {
        name: "sphere_hyperbolic",
        summary: "total curvature of geodesic spheres in H^3",
        claim: "G(S_r) = 4 pi cosh^2 r >= |S^2| for geodesic spheres",
        tolerances: &["rel_err"],
    },
    Entry {
        name: "nested_hulls",
        summary: "random nested hull pairs in constant curvature",
        claim: "G(Gamma) >= G(gamma) for nested convex hypersurfaces when K is constant",
        tolerances: &["difference_floor", "lower_bound_rel"],
    },
    Entry {
        name: "parallel_monotone",
        summary: "total curvature of outer parallel surfaces of a hull",
        claim: "t -> G(Gamma_t) is nondecreasing",
        tolerances: &["monotone", "gauss_bonnet_rel"],
    },
    Entry {
        name: "hausdorff_continuity",
        summary: "level sets of the interpolant approaching a parallel surface",
        claim: "Gamma_eps^lambda -> Gamma_eps as lambda -> 0, with G continuous in Hausdorff distance",
        tolerances: &[],
    },
    Entry {
        name: "lipschitz_d2",
        summary: "Lipschitz constant of grad d_X^2 near a ball and a hull",
        claim: "d_X^2 is C^{1,1} (while d_X is not across the boundary of X)",
        tolerances: &["doubling_change", "control_growth"],
    },
    Entry {
        name: "nonexpansive_maps",
        summary: "nearest-point projection and the log map",
        claim: "pi_X and log_p are 1-Lipschitz in nonpositive curvature",
        tolerances: &["factor_slack"],
    },
    Entry {
        name: "mixed_term_bound",
        summary: "mixed curvature-operator terms near a ball in a warped space",
        claim: "mixed components are bounded by C d_X and vanish where K is constant",
        tolerances: &["ratio_variation", "inside_mixed"],
    },
    Entry {
        name: "comparison_identity",
        summary: "both sides of the comparison formula on concentric spheres",
        claim: "G(Gamma) - G(gamma) = -int sum_i GK_i R_inin + int sum_{i != j} GK_ij (|grad u|_j / |grad u|) R_ijin",
        tolerances: &["residual_rel"],
    },
    Entry {
        name: "n3_estimates",
        summary: "pointwise estimates on the interpolant in dimension three",
        claim: "<grad d_Omega, grad d_D> >= 0, |grad u| >= 2 d_Omega, |grad u|_j bounded in lambda, F_lambda = 0 where K is constant",
        tolerances: &["inner_product_floor", "grad_ratio_slack", "grad_norm_deriv_spread", "f_lambda_floor"],
    },
    Entry {
        name: "gauss_bonnet_2d",
        summary: "total geodesic curvature of convex curves in H^2",
        claim: "int kappa ds = 2 pi + Area for convex curves in H^2",
        tolerances: &["circle_rel", "hull_rel"],
    },
];

pub fn find(name: &str) -> Option<&'static Entry> {
    CATALOG.iter().find(|e| e.name == name)
}

fn h(dim: usize) -> SpaceSpec {
    SpaceSpec::ConstantNegative { dim, k: -1.0 }
}

fn ball(radius: f64) -> BodySpec {
    BodySpec::Ball {
        center: vec![0.0, 0.0, 0.0],
        radius,
    }
}

/// Outer and inner hull of the default random pair.
fn hull_pair() -> Vec<BodySpec> {
    vec![
        BodySpec::RandomHull { vertices: 6, radius: 1.2 },
        BodySpec::RandomHull { vertices: 4, radius: 0.4 },
    ]
}

fn tolerances(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn numerics(grid: &[usize], tol: &[(&str, f64)]) -> Numerics {
    Numerics {
        seed: 20240611,
        grid: grid.to_vec(),
        fd_step: 1e-4,
        level_order: 16,
        refinements: 0,
        samples: 0,
        tolerances: tolerances(tol),
        lambdas: Vec::new(),
        epsilon: None,
        t_grid: Vec::new(),
        level: None,
        base: None,
        workers: None,
    }
}

/// Default config of a catalog entry.
pub fn default_config(name: &str) -> Option<ScenarioConfig> {
    let (space, bodies, numerics) = match name {
        "sphere_euclidean" => (
            SpaceSpec::Euclidean { dim: 3 },
            vec![ball(0.5), ball(2.0)],
            numerics(&[64, 128], &[("rel_err", 1e-6)]),
        ),
        "sphere_hyperbolic" => (h(3), vec![ball(0.5), ball(1.0)], numerics(&[64, 128], &[("rel_err", 1e-4)])),
        "nested_hulls" => {
            let mut n = numerics(&[12, 24], &[("difference_floor", 1e-3), ("lower_bound_rel", 1e-3)]);
            n.samples = 20;
            (h(3), hull_pair(), n)
        }
        "parallel_monotone" => {
            let mut n = numerics(&[32, 64], &[("monotone", 1e-6), ("gauss_bonnet_rel", 5e-3)]);
            n.t_grid = vec![0.05, 0.1, 0.2, 0.4];
            (h(3), vec![BodySpec::RandomHull { vertices: 6, radius: 1.2 }], n)
        }
        "hausdorff_continuity" => {
            let mut n = numerics(&[16, 32], &[]);
            n.lambdas = vec![1e-1, 1e-2, 1e-3];
            (h(3), hull_pair(), n)
        }
        "lipschitz_d2" => {
            let mut n = numerics(&[], &[("doubling_change", 0.05), ("control_growth", 10.0)]);
            n.samples = 10_000;
            n.t_grid = vec![1e-1, 1e-2, 1e-3];
            (
                h(3),
                vec![ball(1.0), BodySpec::RandomHull { vertices: 6, radius: 1.2 }],
                n,
            )
        }
        "nonexpansive_maps" => {
            let mut n = numerics(&[], &[("factor_slack", 1e-8)]);
            n.samples = 1000;
            (
                h(3),
                vec![ball(1.0), BodySpec::RandomHull { vertices: 6, radius: 1.2 }],
                n,
            )
        }
        "mixed_term_bound" => {
            let mut n = numerics(&[], &[("ratio_variation", 0.25), ("inside_mixed", 1e-8)]);
            n.samples = 200;
            n.t_grid = vec![0.2, 0.1, 0.05];
            (SpaceSpec::Warped { dim: 3, r0: 1.0, c: 0.05 }, vec![ball(1.0)], n)
        }
        "comparison_identity" => {
            let mut n = numerics(&[16, 32], &[("residual_rel", 5e-3)]);
            n.refinements = 1;
            n.epsilon = Some(1.0);
            n.lambdas = vec![1.0];
            n.level = Some(0.5);
            n.base = Some(vec![0.1, 0.05, -0.08]);
            (h(3), vec![ball(1.0), ball(0.5)], n)
        }
        "n3_estimates" => {
            let mut n = numerics(
                &[],
                &[
                    ("inner_product_floor", 1e-9),
                    ("grad_ratio_slack", 1e-9),
                    ("grad_norm_deriv_spread", 0.10),
                    ("f_lambda_floor", 1e-9),
                ],
            );
            n.samples = 10_000;
            n.lambdas = vec![1e-1, 1e-2, 1e-3];
            n.t_grid = vec![1e-6, 1.0];
            (h(3), hull_pair(), n)
        }
        "gauss_bonnet_2d" => {
            let n = numerics(&[512], &[("circle_rel", 5e-3), ("hull_rel", 5e-3)]);
            (
                h(2),
                vec![
                    BodySpec::Ball {
                        center: vec![0.0, 0.0],
                        radius: 1.0,
                    },
                    BodySpec::RandomHull { vertices: 7, radius: 1.0 },
                ],
                n,
            )
        }
        _ => return None,
    };
    Some(ScenarioConfig {
        schema_version: SCHEMA_VERSION,
        scenario: name.to_string(),
        space,
        bodies,
        numerics,
        output: None,
    })
}
