//! Distance functions, projections and curvature-operator sweeps.

use std::f64::consts::FRAC_PI_2;

use chlab_core::convex_body::lipschitz_ratio_sweep;
use chlab_core::{BodyKind, ConvexBody, Error as CoreError, Point, TangentVector, Vector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::error::{invalid, Result};
use crate::report::{Recorder, Table};
use crate::run::Ctx;

/// Width of the shell around `X` for the main Lipschitz sweep.
const SHELL: f64 = 0.25;

fn bodies(ctx: &Ctx) -> Result<Vec<ConvexBody>> {
    let mut rng = ctx.rng("bodies", 0);
    (0..ctx.cfg.bodies.len()).map(|i| ctx.body(i, &mut rng)).collect()
}

fn label(body: &ConvexBody) -> &'static str {
    match body.kind() {
        BodyKind::GeodesicBall { .. } => "ball",
        BodyKind::GeodesicHull { .. } => "hull",
    }
}

impl Ctx<'_> {
    /// `p = exp(foot, s n)` at distance `s <= width` from the body, and a
    /// partner within `width` of the foot point (inside or outside).
    fn shell_pair(&self, body: &ConvexBody, rng: &mut ChaCha8Rng, width: f64) -> Result<(Point, Point)> {
        let (foot, n) = self.boundary_point(body, rng)?;
        let p = self.space.exp_map(&foot, &n.scaled(width * rng.gen::<f64>()))?;
        let u = self.space.random_unit(rng, &foot);
        let q = self.space.exp_map(&foot, &u.scaled(width * rng.gen::<f64>()))?;
        Ok((p, q))
    }
}

/// `grad d_X^2` over pairs in a shell around each body, plus the
/// unsquared `grad d_X` (zero on `X`) over shrinking straddling pairs.
pub(crate) fn lipschitz_d2(ctx: &mut Ctx) -> Result<()> {
    let rec = lipschitz_sweeps(ctx)?;
    ctx.rec = rec;
    Ok(())
}

fn lipschitz_sweeps(ctx: &mut Ctx) -> Result<Recorder> {
    let pairs = ctx.cfg.numerics.samples;
    if pairs == 0 || ctx.cfg.numerics.t_grid.len() < 2 {
        return Err(invalid("lipschitz_d2 needs samples > 0 and at least two control separations"));
    }
    let mut deltas = ctx.cfg.numerics.t_grid.clone();
    deltas.sort_by(|a, b| b.total_cmp(a));
    let control_pairs = (pairs / 10).max(1);
    let mut sweep = Table::new(
        "lipschitz",
        &["body", "pairs", "skipped", "max_ratio_base", "max_ratio_doubled", "relative_change"],
    );
    let mut control = Table::new("control", &["body", "separation", "max_ratio_squared", "max_ratio_unsquared"]);
    let mut histogram = Table::new("histogram", &["body", "lo", "hi", "count"]);
    let mut rec = std::mem::take(&mut ctx.rec);
    let ctx = &*ctx;
    for (b, body) in bodies(ctx)?.iter().enumerate() {
        let name = label(body);
        let space = &ctx.space;
        let squared = |p: &Point| body.grad_distance_squared(p);
        let unsquared = |p: &Point| match body.grad_distance(p) {
            Err(CoreError::InsideBody) => Ok(ctx.zero(p)),
            other => other,
        };
        let stats = lipschitz_ratio_sweep(
            space,
            squared,
            |i| ctx.shell_pair(body, &mut ctx.rng(&format!("shell/{b}"), i), SHELL).map_err(core_error),
            pairs,
        )?;
        rec.at_most(&format!("doubling_change_{name}"), stats.relative_change, ctx.cfg.tol("doubling_change"));
        sweep.push(vec![
            json!(name),
            json!(stats.pairs),
            json!(stats.skipped),
            json!(stats.max_ratio_base),
            json!(stats.max_ratio),
            json!(stats.relative_change),
        ]);
        for bin in &stats.histogram {
            histogram.push(vec![json!(name), json!(bin.lo), json!(bin.hi), json!(bin.count)]);
        }
        let mut unsquared_max = Vec::new();
        for (j, delta) in deltas.iter().enumerate() {
            let sampler = |i| {
                ctx.shell_pair(body, &mut ctx.rng(&format!("control/{b}/{j}"), i), *delta)
                    .map_err(core_error)
            };
            let sq = lipschitz_ratio_sweep(space, squared, sampler, control_pairs)?;
            let un = lipschitz_ratio_sweep(space, unsquared, sampler, control_pairs)?;
            unsquared_max.push(un.max_ratio);
            control.push(vec![json!(name), json!(delta), json!(sq.max_ratio), json!(un.max_ratio)]);
        }
        let growth = unsquared_max.last().unwrap() / unsquared_max[0];
        rec.at_least(&format!("control_growth_{name}"), growth, ctx.cfg.tol("control_growth"));
    }
    rec.table(sweep);
    rec.table(control);
    rec.table(histogram);
    Ok(rec)
}

fn core_error(e: crate::error::ScenarioError) -> CoreError {
    match e {
        crate::error::ScenarioError::Numerical(e) => e,
        other => CoreError::InvalidArgument(other.to_string()),
    }
}

/// Pair `i`: `p` within 2.5 of the origin and `q` at a log-uniform
/// distance in `[1e-4, 2]` from it.
fn random_pair(ctx: &Ctx, rng: &mut ChaCha8Rng) -> Result<(Point, Point)> {
    let o = ctx.space.origin();
    let p = ctx.space.random_point(rng, &o, 2.5)?;
    let s = 10f64.powf(-4.0 + rng.gen::<f64>() * (2f64.log10() + 4.0));
    let u = ctx.space.random_unit(rng, &p);
    Ok((p, ctx.space.exp_map(&p, &u.scaled(s))?))
}

pub(crate) fn nonexpansive_maps(ctx: &mut Ctx) -> Result<()> {
    let pairs = ctx.cfg.numerics.samples;
    if pairs == 0 {
        return Err(invalid("nonexpansive_maps needs samples > 0"));
    }
    let bound = 1.0 + ctx.cfg.tol("factor_slack");
    let mut table = Table::new("factors", &["map", "body", "pairs", "max_factor"]);
    let sweep = |stream: &str, f: &(dyn Fn(&mut ChaCha8Rng, &Point, &Point) -> Result<f64> + Sync)| -> Result<f64> {
        let factors = (0..pairs as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = ctx.rng(stream, i);
                let (p, q) = random_pair(ctx, &mut rng)?;
                let d = ctx.space.distance(&p, &q)?;
                Ok(f(&mut rng, &p, &q)? / d)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(factors.into_iter().fold(0.0, f64::max))
    };
    let mut results = Vec::new();
    for (b, body) in bodies(ctx)?.iter().enumerate() {
        let proj = sweep(&format!("projection/{b}"), &|_, p, q| {
            Ok(ctx.space.distance(&body.project(p)?.foot, &body.project(q)?.foot)?)
        })?;
        results.push(("projection", label(body), proj));
    }
    let log = sweep("log", &|rng, p, q| {
        let base = ctx.space.random_point(rng, &ctx.space.origin(), 2.0)?;
        let a = ctx.space.log_map(&base, p)?;
        let b = ctx.space.log_map(&base, q)?;
        Ok(ctx.space.norm(&TangentVector::new(base, a.components - b.components)))
    })?;
    results.push(("log", "-", log));
    for (map, body, factor) in results {
        let name = if body == "-" { map.to_string() } else { format!("{map}_{body}") };
        ctx.rec.at_most(&format!("max_factor_{name}"), factor, bound);
        table.push(vec![json!(map), json!(body), json!(pairs), json!(factor)]);
    }
    ctx.rec.table(table);
    Ok(())
}

/// Off-diagonal curvature-operator entries in frames rotating the radial
/// direction into a tangential one, at distances `t` from a ball about
/// the origin, and in random frames inside the ball.
pub(crate) fn mixed_term_bound(ctx: &mut Ctx) -> Result<()> {
    ctx.require_bodies(1)?;
    let frames = ctx.cfg.numerics.samples;
    if frames == 0 || ctx.cfg.numerics.t_grid.is_empty() {
        return Err(invalid("mixed_term_bound needs samples > 0 and a t grid"));
    }
    let body = bodies(ctx)?.remove(0);
    let o = ctx.space.origin();
    let radius = match body.kind() {
        BodyKind::GeodesicBall { center, radius } if ctx.space.distance(center, &o)? == 0.0 => *radius,
        _ => return Err(invalid("mixed_term_bound expects a ball centred at the origin")),
    };
    let space = &ctx.space;
    let dim = space.dim();
    let mut table = Table::new("mixed", &["d_x", "max_mixed", "ratio"]);
    let mut ratios = Vec::new();
    for (j, d) in ctx.cfg.numerics.t_grid.iter().enumerate() {
        let samples = (0..frames as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = ctx.rng(&format!("outside/{j}"), i);
                let dir = space.random_unit(&mut rng, &o);
                let p = space.exp_map(&o, &dir.scaled(radius + d))?;
                let radial = space.radial_unit(&o, &p)?;
                let base = space.complete_frame(&p, &[radial])?.vectors;
                let theta = FRAC_PI_2 * (i as f64 + 0.5) / frames as f64;
                let (s, c) = theta.sin_cos();
                let mut vectors = vec![base[0].scaled(c).axpy(s, &base[1]), base[0].scaled(-s).axpy(c, &base[1])];
                vectors.extend(base[2..].iter().cloned());
                let frame = space.frame(&p, vectors)?;
                Ok((body.distance_to(&p)?, space.curvature_operator_matrix(&frame)?.max_mixed()))
            })
            .collect::<Result<Vec<(f64, f64)>>>()?;
        let d_x = samples.iter().map(|s| s.0).sum::<f64>() / samples.len() as f64;
        let max = samples.iter().map(|s| s.1).fold(0.0, f64::max);
        ratios.push(max / d_x);
        table.push(vec![json!(d_x), json!(max), json!(max / d_x)]);
    }
    let hi = ratios.iter().cloned().fold(0.0, f64::max);
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    ctx.rec.at_most("ratio_variation", hi / lo - 1.0, ctx.cfg.tol("ratio_variation"));

    let inside = (0..frames as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ctx.rng("inside", i);
            let p = space.random_point(&mut rng, &o, radius)?;
            let raw: Vec<Vector> = (0..dim + 2).map(|_| space.random_unit(&mut rng, &p).components).collect();
            let vectors = space.gram_schmidt(&p, &raw).into_iter().take(dim).collect();
            Ok(space.curvature_operator_matrix(&space.frame(&p, vectors)?)?.max_mixed())
        })
        .collect::<Result<Vec<f64>>>()?;
    let inside_max = inside.into_iter().fold(0.0, f64::max);
    ctx.rec.at_most("inside_max_mixed", inside_max, ctx.cfg.tol("inside_mixed"));
    let mut inner = Table::new("inside", &["frames", "max_mixed"]);
    inner.push(vec![json!(frames), json!(inside_max)]);
    ctx.rec.table(table);
    ctx.rec.table(inner);
    Ok(())
}
