//! Total curvature of spheres, hulls and their parallel surfaces.

use std::f64::consts::PI;

use chlab_core::surface_calculus::{parallel_hypersurface, surface_summary, total_curvature_limit, LimitOptions};
use chlab_core::{unit_sphere_volume, AnalyticSphere, BodyKind, ConvexBody};
use serde_json::json;

use crate::error::{invalid, Result};
use crate::report::Table;
use crate::run::{richardson, Ctx};

/// `sqrt(-k)`, or 0 in Euclidean space.
fn curvature_scale(ctx: &Ctx) -> Result<f64> {
    match ctx.space.constant_curvature() {
        Some(k) => Ok((-k).sqrt()),
        None => Err(invalid(format!("{} needs a constant-curvature space", ctx.cfg.scenario))),
    }
}

fn sphere_of(body: &ConvexBody) -> Result<(chlab_core::Point, f64)> {
    match body.kind() {
        BodyKind::GeodesicBall { center, radius } => Ok((*center, *radius)),
        _ => Err(invalid("expected a ball")),
    }
}

/// Spheres against `G = |S^{n-1}| cosh^{n-1}(sqrt(-k) r)`.
pub(crate) fn spheres(ctx: &mut Ctx, lower_bound: bool) -> Result<()> {
    let a = curvature_scale(ctx)?;
    let n = ctx.space.dim();
    let unit = unit_sphere_volume(n)?;
    let grid = ctx.cfg.grid()?;
    let tol = ctx.cfg.tol("rel_err");
    let mut table = Table::new(
        "spheres",
        &["radius", "total_curvature", "exact", "rel_err", "area", "exact_area"],
    );
    let mut rng = ctx.rng("bodies", 0);
    for i in 0..ctx.cfg.bodies.len() {
        let (center, r) = sphere_of(&ctx.body(i, &mut rng)?)?;
        let sphere = AnalyticSphere::new(&ctx.space, center, r)?;
        let graph = sphere.graph(grid.clone(), ctx.cfg.surface_options(2.0 * r))?;
        let s = surface_summary(&graph)?;
        let (exact, exact_area) = if a == 0.0 {
            (unit, unit * r.powi(n as i32 - 1))
        } else {
            (
                unit * (a * r).cosh().powi(n as i32 - 1),
                unit * ((a * r).sinh() / a).powi(n as i32 - 1),
            )
        };
        let rel = (s.total_curvature / exact - 1.0).abs();
        ctx.rec.at_most(&format!("rel_err_r{r}"), rel, tol);
        if lower_bound {
            ctx.rec.at_least(&format!("at_least_unit_sphere_r{r}"), s.total_curvature, unit);
        }
        table.push(vec![
            json!(r),
            json!(s.total_curvature),
            json!(exact),
            json!(rel),
            json!(s.area),
            json!(exact_area),
        ]);
    }
    ctx.rec.table(table);
    Ok(())
}

pub(crate) fn nested_hulls(ctx: &mut Ctx) -> Result<()> {
    ctx.require_bodies(2)?;
    ctx.require_dim(3)?;
    let grid = ctx.cfg.grid()?;
    let unit = unit_sphere_volume(3)?;
    let limit = LimitOptions::default();
    let mut table = Table::new(
        "pairs",
        &["pair", "g_outer", "g_inner", "difference", "outer_converged", "inner_converged", "monotone"],
    );
    let mut differences = Vec::new();
    let mut outer_ratios = Vec::new();
    for i in 0..ctx.cfg.numerics.samples {
        let (outer, inner) = ctx.nested_pair(i as u64)?;
        let go = total_curvature_limit(&outer, grid.clone(), ctx.cfg.surface_options(outer.diameter()?), &limit)?;
        let gi = total_curvature_limit(&inner, grid.clone(), ctx.cfg.surface_options(inner.diameter()?), &limit)?;
        differences.push(go.value - gi.value);
        outer_ratios.push(go.value / unit);
        table.push(vec![
            json!(i),
            json!(go.value),
            json!(gi.value),
            json!(go.value - gi.value),
            json!(go.converged),
            json!(gi.converged),
            json!(go.monotone && gi.monotone),
        ]);
    }
    let min = |xs: &[f64]| xs.iter().cloned().fold(f64::INFINITY, f64::min);
    ctx.rec
        .at_least("min_difference", min(&differences), -ctx.cfg.tol("difference_floor"));
    ctx.rec
        .at_least("min_outer_over_unit_sphere", min(&outer_ratios), 1.0 - ctx.cfg.tol("lower_bound_rel"));
    ctx.rec.table(table);
    Ok(())
}

/// `G(Gamma_t)` over the t grid, with the Gauss-Bonnet value
/// `|S^{n-1}| - k * measure` as an oracle in constant curvature.
pub(crate) fn parallel_monotone(ctx: &mut Ctx) -> Result<()> {
    ctx.require_bodies(1)?;
    let grid = ctx.cfg.grid()?;
    let body = ctx.body(0, &mut ctx.rng("bodies", 0))?;
    let opts = ctx.cfg.surface_options(body.diameter()?);
    let mut ts = ctx.cfg.numerics.t_grid.clone();
    ts.sort_by(f64::total_cmp);
    let k = ctx.space.constant_curvature();
    let n = ctx.space.dim();
    let mut table = Table::new(
        "parallel",
        &["t", "total_curvature", "area", "enclosed_volume", "gauss_bonnet", "rel_err", "convexity_violations"],
    );
    let mut totals = Vec::new();
    let mut worst_rel = 0.0_f64;
    for t in &ts {
        let s = surface_summary(&parallel_hypersurface(&body, *t, grid.clone(), opts)?)?;
        let oracle = match (k, n) {
            (Some(k), 3) => 4.0 * PI - k * s.area,
            (Some(k), 2) => 2.0 * PI - k * s.enclosed_volume,
            _ => f64::NAN,
        };
        let rel = (s.total_curvature / oracle - 1.0).abs();
        if oracle.is_finite() {
            worst_rel = worst_rel.max(rel);
        }
        totals.push(s.total_curvature);
        table.push(vec![
            json!(t),
            json!(s.total_curvature),
            json!(s.area),
            json!(s.enclosed_volume),
            json!(oracle),
            json!(rel),
            json!(s.convexity_violations),
        ]);
    }
    let drop = totals.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max);
    ctx.rec.at_most("max_decrease", drop, ctx.cfg.tol("monotone"));
    if k.is_some() {
        ctx.rec.at_most("gauss_bonnet_rel_err", worst_rel, ctx.cfg.tol("gauss_bonnet_rel"));
    }
    ctx.rec.table(table);
    Ok(())
}

/// Circles against `2 pi cosh(sqrt(-k) r)` and a hull curve against
/// `2 pi - k Area`, with the area extrapolated from parallel curves.
pub(crate) fn gauss_bonnet_2d(ctx: &mut Ctx) -> Result<()> {
    ctx.require_dim(2)?;
    ctx.require_bodies(2)?;
    let a = curvature_scale(ctx)?;
    let k = -a * a;
    let grid = ctx.cfg.grid()?;
    let mut rng = ctx.rng("bodies", 0);

    let (center, r) = sphere_of(&ctx.body(0, &mut rng)?)?;
    let circle = AnalyticSphere::new(&ctx.space, center, r)?.graph(grid.clone(), ctx.cfg.surface_options(2.0 * r))?;
    let g_circle = surface_summary(&circle)?.total_curvature;
    let exact = 2.0 * PI * if a == 0.0 { 1.0 } else { (a * r).cosh() };
    let circle_rel = (g_circle / exact - 1.0).abs();
    ctx.rec.at_most("circle_rel_err", circle_rel, ctx.cfg.tol("circle_rel"));

    let hull = ctx.body(1, &mut rng)?;
    if !matches!(hull.kind(), BodyKind::GeodesicHull { .. }) {
        return Err(invalid("body 1 of gauss_bonnet_2d must be a hull"));
    }
    let opts = ctx.cfg.surface_options(hull.diameter()?);
    let limit = total_curvature_limit(&hull, grid.clone(), opts, &LimitOptions::default())?;
    let mut curves = Table::new("hull_curves", &["t", "total_curvature", "enclosed_area", "gauss_bonnet", "rel_err"]);
    let mut areas = Vec::new();
    for (t, g) in limit.t_values.iter().zip(&limit.totals) {
        let s = surface_summary(&parallel_hypersurface(&hull, *t, grid.clone(), opts)?)?;
        let oracle = 2.0 * PI - k * s.enclosed_volume;
        areas.push(s.enclosed_volume);
        curves.push(vec![json!(t), json!(g), json!(s.enclosed_volume), json!(oracle), json!((g / oracle - 1.0).abs())]);
    }
    let area = richardson(&areas);
    let expected = 2.0 * PI - k * area;
    let hull_rel = (limit.value / expected - 1.0).abs();
    ctx.rec.at_most("hull_rel_err", hull_rel, ctx.cfg.tol("hull_rel"));

    let mut summary = Table::new("gauss_bonnet", &["curve", "total_curvature", "expected", "rel_err", "area"]);
    summary.push(vec![json!("circle"), json!(g_circle), json!(exact), json!(circle_rel), json!(circle.enclosed_volume())]);
    summary.push(vec![json!("hull"), json!(limit.value), json!(expected), json!(hull_rel), json!(area)]);
    ctx.rec.table(summary);
    ctx.rec.table(curves);
    Ok(())
}
