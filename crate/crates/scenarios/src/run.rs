use std::env;
use std::time::Instant;

use chlab_core::sampling::{counter_rng, stream_id};
use chlab_core::{ConvexBody, ModelSpace, Point, TangentVector, Vector};
use rand_chacha::ChaCha8Rng;

use crate::config::{BodySpec, ScenarioConfig};
use crate::error::{invalid, Result, ScenarioError};
use crate::report::{Recorder, ScenarioReport};
use crate::{interpolant, sweeps, surfaces};

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "CHLAB_WORKERS";

const MAX_ATTEMPTS: usize = 10_000;

/// Runs one catalog entry. Failed checks are recorded in the report; only
/// invalid configs and numerical failures are errors.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioReport> {
    config.validate()?;
    let workers = match env::var(WORKERS_ENV) {
        Ok(v) => Some(
            v.parse::<usize>()
                .ok()
                .filter(|n| *n > 0)
                .ok_or_else(|| invalid(format!("{WORKERS_ENV} must be a positive integer, got '{v}'")))?,
        ),
        Err(_) => config.numerics.workers,
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| invalid(format!("worker pool: {e}")))?;
    let start = Instant::now();
    let mut ctx = Ctx {
        cfg: config,
        space: config.space()?,
        rec: Recorder::default(),
    };
    pool.install(|| dispatch(&mut ctx))?;
    let Recorder { checks, tables } = ctx.rec;
    Ok(ScenarioReport {
        scenario: config.scenario.clone(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        passed: checks.iter().all(|c| c.passed),
        config: config.clone(),
        checks,
        tables,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

fn dispatch(ctx: &mut Ctx) -> Result<()> {
    match ctx.cfg.scenario.as_str() {
        "sphere_euclidean" => surfaces::spheres(ctx, false),
        "sphere_hyperbolic" => surfaces::spheres(ctx, true),
        "nested_hulls" => surfaces::nested_hulls(ctx),
        "parallel_monotone" => surfaces::parallel_monotone(ctx),
        "hausdorff_continuity" => interpolant::hausdorff_continuity(ctx),
        "gauss_bonnet_2d" => surfaces::gauss_bonnet_2d(ctx),
        "lipschitz_d2" => sweeps::lipschitz_d2(ctx),
        "nonexpansive_maps" => sweeps::nonexpansive_maps(ctx),
        "mixed_term_bound" => sweeps::mixed_term_bound(ctx),
        "comparison_identity" => interpolant::comparison_identity(ctx),
        "n3_estimates" => interpolant::n3_estimates(ctx),
        other => Err(invalid(format!("unknown scenario '{other}'"))),
    }
}

pub(crate) struct Ctx<'a> {
    pub cfg: &'a ScenarioConfig,
    pub space: ModelSpace,
    pub rec: Recorder,
}

impl Ctx<'_> {
    /// Generator for sample `index` of a named stream of this scenario.
    pub fn rng(&self, stream: &str, index: u64) -> ChaCha8Rng {
        let name = format!("{}/{stream}", self.cfg.scenario);
        counter_rng(self.cfg.numerics.seed, stream_id(&name), index)
    }

    pub fn require_bodies(&self, count: usize) -> Result<()> {
        if self.cfg.bodies.len() != count {
            return Err(invalid(format!(
                "{} expects {count} bodies, got {}",
                self.cfg.scenario,
                self.cfg.bodies.len()
            )));
        }
        Ok(())
    }

    pub fn require_dim(&self, dim: usize) -> Result<()> {
        if self.space.dim() != dim {
            return Err(invalid(format!("{} runs in dimension {dim}", self.cfg.scenario)));
        }
        Ok(())
    }

    /// Body `i` of the config; random hulls are drawn from `rng`.
    pub fn body(&self, i: usize, rng: &mut ChaCha8Rng) -> Result<ConvexBody> {
        let spec = &self.cfg.bodies[i];
        if let Some(b) = spec.build_fixed(&self.space)? {
            return Ok(b);
        }
        let BodySpec::RandomHull { vertices, radius } = *spec else {
            unreachable!("fixed bodies are built above")
        };
        let o = self.space.origin();
        for _ in 0..MAX_ATTEMPTS {
            let vs = (0..vertices)
                .map(|_| self.space.random_point(rng, &o, radius))
                .collect::<chlab_core::Result<Vec<_>>>()?;
            if let Ok(b) = ConvexBody::hull(&self.space, vs) {
                return Ok(b);
            }
        }
        Err(numerical("no nondegenerate random hull"))
    }

    /// Pair `index` of nested bodies `(outer, inner)` from bodies 0 and 1,
    /// rejection-sampled until the inner one lies in the outer interior.
    pub fn nested_pair(&self, index: u64) -> Result<(ConvexBody, ConvexBody)> {
        let fixed = self.cfg.bodies.iter().all(|b| !matches!(b, BodySpec::RandomHull { .. }));
        let mut rng = self.rng("pair", index);
        for _ in 0..MAX_ATTEMPTS {
            let outer = self.body(0, &mut rng)?;
            let inner = self.body(1, &mut rng)?;
            if outer.strictly_contains(&inner)? {
                return Ok((outer, inner));
            }
            if fixed {
                return Err(invalid("body 1 must lie in the interior of body 0"));
            }
        }
        Err(numerical("no nested random pair"))
    }

    pub fn epsilon(&self, outer: &ConvexBody) -> Result<f64> {
        match self.cfg.numerics.epsilon {
            Some(e) => Ok(e),
            None => Ok(0.05 * outer.diameter()?),
        }
    }

    pub fn base(&self) -> Result<Option<Point>> {
        self.cfg
            .numerics
            .base
            .as_ref()
            .map(|b| self.space.point_from_polar(b).map_err(|e| invalid(format!("base: {e}"))))
            .transpose()
    }

    pub fn zero(&self, p: &Point) -> TangentVector {
        TangentVector::new(*p, Vector::zeros(self.space.coord_len()))
    }

    /// A point `p` off `body` with its foot point and the unit outward
    /// direction at the foot, so that `exp(foot, s n)` is at distance `s`.
    pub fn boundary_point(&self, body: &ConvexBody, rng: &mut ChaCha8Rng) -> Result<(Point, TangentVector)> {
        let centre = body.interior_point();
        let reach = body.diameter()? + 1.0;
        for _ in 0..MAX_ATTEMPTS {
            let x = self.space.random_point(rng, &centre, reach)?;
            let pr = body.project(&x)?;
            if pr.dist > 1e-3 {
                let v = self.space.log_map(&pr.foot, &x)?;
                let n = self.space.norm(&v);
                return Ok((pr.foot, v.scaled(1.0 / n)));
            }
        }
        Err(numerical("no sample outside the body"))
    }
}

pub(crate) fn numerical(what: &'static str) -> ScenarioError {
    ScenarioError::Numerical(chlab_core::Error::NoConvergence { what, residual: f64::NAN })
}

/// Richardson table over values at halving steps of a first-order
/// expansion; returns the last diagonal entry.
pub(crate) fn richardson(values: &[f64]) -> f64 {
    let mut table: Vec<Vec<f64>> = Vec::new();
    for (k, v) in values.iter().enumerate() {
        let mut row = vec![*v];
        for j in 1..=k {
            let f = 2f64.powi(j as i32);
            let prev = table[k - 1][j - 1];
            row.push(row[j - 1] + (row[j - 1] - prev) / (f - 1.0));
        }
        table.push(row);
    }
    table.last().map(|r| *r.last().unwrap()).unwrap_or(f64::NAN)
}

/// Counts adjacent pairs of `xs` that fail `ok`.
pub(crate) fn violations(xs: &[f64], ok: impl Fn(f64, f64) -> bool) -> usize {
    xs.windows(2).filter(|w| !ok(w[0], w[1])).count()
}
