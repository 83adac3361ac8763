//! Scenarios built on the interpolant `u = lambda d_D + d_Omega^2`.

use std::f64::consts::PI;
use std::sync::Arc;

use chlab_core::comparison::{
    comparison_identity_report, extract_level_set, f_lambda, n3_estimates_report, ComparisonOptions,
};
use chlab_core::surface_calculus::{hausdorff_distance, refined_level_set, surface_summary, LimitOptions};
use chlab_core::{unit_sphere_volume, BodyKind, ConvexBody, InterpolantField, RadialGraph, ScalarField};
use rand::Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::error::{invalid, Result};
use crate::report::Table;
use crate::run::{numerical, violations, Ctx};

/// `G(Gamma) - G(gamma)` in closed form for concentric balls in constant
/// curvature.
fn concentric_lhs(ctx: &Ctx, outer: &ConvexBody, inner: &ConvexBody) -> Result<Option<f64>> {
    let (Some(k), BodyKind::GeodesicBall { center: c1, radius: r2 }, BodyKind::GeodesicBall { center: c0, radius: r1 }) =
        (ctx.space.constant_curvature(), outer.kind(), inner.kind())
    else {
        return Ok(None);
    };
    if ctx.space.distance(c0, c1)? > 1e-12 {
        return Ok(None);
    }
    let n = ctx.space.dim() as i32;
    let a = (-k).sqrt();
    let g = |r: f64| if a == 0.0 { 1.0 } else { (a * r).cosh().powi(n - 1) };
    Ok(Some(unit_sphere_volume(ctx.space.dim())? * (g(*r2) - g(*r1))))
}

pub(crate) fn comparison_identity(ctx: &mut Ctx) -> Result<()> {
    ctx.require_bodies(2)?;
    let level = ctx
        .cfg
        .numerics
        .level
        .ok_or_else(|| invalid("comparison_identity needs numerics.level"))?;
    let &[lambda] = ctx.cfg.numerics.lambdas.as_slice() else {
        return Err(invalid("comparison_identity takes exactly one lambda"));
    };
    let (outer, inner) = ctx.nested_pair(0)?;
    let lambda = lambda * ctx.epsilon(&outer)?;
    let exact = concentric_lhs(ctx, &outer, &inner)?;
    let field = InterpolantField::new(inner, outer.clone(), lambda)?;
    let opts = ComparisonOptions {
        level,
        base: ctx.base()?,
        grid: ctx.cfg.grid()?,
        surface: ctx.cfg.surface_options(outer.diameter()?),
        order: ctx.cfg.numerics.level_order,
        refinements: ctx.cfg.numerics.refinements,
        limit: LimitOptions::default(),
    };
    let r = comparison_identity_report(&field, &opts)?;
    let tol = ctx.cfg.tol("residual_rel");
    let reference = exact.unwrap_or(r.lhs).abs();
    ctx.rec.at_most("residual_over_lhs", r.residual / reference, tol);
    if let Some(e) = exact {
        ctx.rec.at_most("lhs_closed_form_rel_err", (r.lhs / e - 1.0).abs(), tol);
    }
    if r.refinement_history.len() > 1 {
        let residuals: Vec<f64> = r.refinement_history.iter().map(|h| h.residual).collect();
        ctx.rec.holds(
            "residual_decreases_under_refinement",
            violations(&residuals, |a, b| b < a),
            "grid doubled with the finite-difference step halved",
        );
    }
    let mut summary = Table::new(
        "comparison",
        &[
            "lhs", "lhs_exact", "rhs_term1", "rhs_term2", "residual", "inequality_margin", "g_outer", "g_inner",
            "samples", "jittered", "unresolved",
        ],
    );
    summary.push(vec![
        json!(r.lhs),
        json!(exact),
        json!(r.rhs_term1),
        json!(r.rhs_term2),
        json!(r.residual),
        json!(r.inequality_margin),
        json!(r.g_outer),
        json!(r.g_inner),
        json!(r.samples),
        json!(r.jittered),
        json!(r.unresolved),
    ]);
    let mut history = Table::new("refinement", &["grid", "fd_step", "lhs", "rhs", "residual"]);
    for h in &r.refinement_history {
        history.push(vec![json!(h.grid), json!(h.fd_step), json!(h.lhs), json!(h.rhs), json!(h.residual)]);
    }
    ctx.rec.table(summary);
    ctx.rec.table(history);
    Ok(())
}

/// `{u = eps^2}` against the parallel surface `{d_Omega = eps}` as
/// `lambda -> 0`. Hausdorff distances compare plain graphs over the same
/// rays; total curvatures use adaptively refined surfaces.
pub(crate) fn hausdorff_continuity(ctx: &mut Ctx) -> Result<()> {
    ctx.require_bodies(2)?;
    let (outer, inner) = ctx.nested_pair(0)?;
    let eps = ctx.epsilon(&outer)?;
    let grid = ctx.cfg.grid()?;
    let refined = ctx.cfg.surface_options(outer.diameter()?);
    let mut plain = refined;
    plain.adaptive = None;
    let base = match ctx.base()? {
        Some(b) => b,
        None => inner.interior_point(),
    };
    let omega: Arc<dyn ScalarField> = Arc::new(outer.clone());
    let parallel = RadialGraph::level_set(omega.clone(), eps, base, grid.clone(), plain)?;
    let parallel_summary = surface_summary(&refined_level_set(omega, eps, base, grid.clone(), refined)?)?;
    let g_eps = parallel_summary.total_curvature;
    let k = ctx.space.constant_curvature();
    let oracle = |area: f64| match (k, ctx.space.dim()) {
        (Some(k), 3) => 4.0 * PI - k * area,
        _ => f64::NAN,
    };
    let mut lambdas = ctx.cfg.numerics.lambdas.clone();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    let mut table = Table::new(
        "continuity",
        &["lambda", "hausdorff", "g_lambda", "g_eps", "abs_difference", "gauss_bonnet_lambda", "gauss_bonnet_eps"],
    );
    let mut distances = Vec::new();
    let mut gaps = Vec::new();
    for m in &lambdas {
        let field = InterpolantField::new(inner.clone(), outer.clone(), m * eps)?;
        let level_set = extract_level_set(&field, eps * eps, base, grid.clone(), plain)?;
        let h = hausdorff_distance(&level_set, &parallel)?;
        let s = surface_summary(&refined_level_set(Arc::new(field), eps * eps, base, grid.clone(), refined)?)?;
        let gap = (s.total_curvature - g_eps).abs();
        distances.push(h);
        gaps.push(gap);
        table.push(vec![
            json!(m * eps),
            json!(h),
            json!(s.total_curvature),
            json!(g_eps),
            json!(gap),
            json!(oracle(s.area)),
            json!(oracle(parallel_summary.area)),
        ]);
    }
    ctx.rec.holds("hausdorff_decreasing", violations(&distances, |a, b| b < a), "");
    ctx.rec.holds("curvature_gap_decreasing", violations(&gaps, |a, b| b < a), "");
    ctx.rec.table(table);
    Ok(())
}

pub(crate) fn n3_estimates(ctx: &mut Ctx) -> Result<()> {
    ctx.require_bodies(2)?;
    ctx.require_dim(3)?;
    let n = ctx.cfg.numerics.samples;
    let &[d_min, d_max] = ctx.cfg.numerics.t_grid.as_slice() else {
        return Err(invalid("n3_estimates takes t_grid = [d_min, d_max] for the sampled d_Omega range"));
    };
    if n == 0 || ctx.cfg.numerics.lambdas.is_empty() || !(d_min < d_max) {
        return Err(invalid("n3_estimates needs samples > 0, lambdas and d_min < d_max"));
    }
    let (outer, inner) = ctx.nested_pair(0)?;
    let eps = ctx.epsilon(&outer)?;
    let h = ctx.cfg.numerics.fd_step * outer.diameter()?;
    let lambdas: Vec<f64> = ctx.cfg.numerics.lambdas.iter().map(|m| m * eps).collect();
    let (lo, hi) = (d_min.ln(), d_max.ln());
    let points = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ctx.rng("outside", i);
            let (foot, normal) = ctx.boundary_point(&outer, &mut rng)?;
            let d = (lo + rng.gen::<f64>() * (hi - lo)).exp();
            Ok(ctx.space.exp_map(&foot, &normal.scaled(d))?)
        })
        .collect::<Result<Vec<_>>>()?;
    let field = InterpolantField::new(inner.clone(), outer.clone(), lambdas[0])?;
    let report = n3_estimates_report(&field, &lambdas, &points, h)?;

    // Samples in Omega \ D.
    let between_n = (n / 10).max(1);
    let reach = outer.diameter()?;
    let centre = outer.interior_point();
    let between = (0..between_n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ctx.rng("between", i);
            for _ in 0..10_000 {
                let p = ctx.space.random_point(&mut rng, &centre, reach)?;
                if outer.distance_to(&p)? == 0.0 && inner.distance_to(&p)? > 1e-3 {
                    return Ok(p);
                }
            }
            Err(numerical("no sample between the bodies"))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut between_max = 0.0_f64;
    for lam in &lambdas {
        let f = field.with_lambda(*lam)?;
        let m = between
            .par_iter()
            .map(|p| Ok(f_lambda(&f, p, h)?.abs()))
            .collect::<Result<Vec<f64>>>()?;
        between_max = m.into_iter().fold(between_max, f64::max);
    }

    let per = &report.per_lambda;
    let min_inner = per.iter().map(|l| l.min_inner_product).fold(f64::INFINITY, f64::min);
    let min_ratio = per.iter().map(|l| l.min_grad_ratio).fold(f64::INFINITY, f64::min);
    let max_f = per.iter().map(|l| l.max_abs_f_lambda).fold(0.0, f64::max);
    let floor = ctx.cfg.tol("f_lambda_floor");
    ctx.rec.at_least("min_inner_product", min_inner, -ctx.cfg.tol("inner_product_floor"));
    ctx.rec.at_least("min_grad_ratio", min_ratio, 1.0 - ctx.cfg.tol("grad_ratio_slack"));
    ctx.rec
        .at_most("grad_norm_deriv_spread", report.grad_norm_deriv_spread, ctx.cfg.tol("grad_norm_deriv_spread"));
    ctx.rec.at_most("max_f_lambda_between", between_max, floor);
    if ctx.space.constant_curvature().is_some() {
        ctx.rec.at_most("max_f_lambda_outside", max_f, floor);
    }

    let mut summary = Table::new(
        "per_lambda",
        &[
            "lambda", "samples", "min_inner_product", "min_grad_ratio", "max_grad_norm_deriv", "max_abs_f_lambda",
            "max_norm_identity_residual", "jittered", "unresolved",
        ],
    );
    for l in per {
        summary.push(vec![
            json!(l.lambda),
            json!(l.samples),
            json!(l.min_inner_product),
            json!(l.min_grad_ratio),
            json!(l.max_grad_norm_deriv),
            json!(l.max_abs_f_lambda),
            json!(l.max_norm_identity_residual),
            json!(l.jittered),
            json!(l.unresolved),
        ]);
    }
    let mut samples = Table::new(
        "samples",
        &["lambda", "d_outer", "inner_product", "grad_ratio", "max_grad_norm_deriv", "f_lambda", "jitters", "unresolved"],
    );
    for s in &report.samples {
        samples.push(vec![
            json!(s.lambda),
            json!(s.d_outer),
            json!(s.inner_product),
            json!(s.grad_ratio),
            json!(s.max_grad_norm_deriv),
            json!(s.f_lambda),
            json!(s.jitters),
            json!(s.unresolved),
        ]);
    }
    ctx.rec.table(summary);
    ctx.rec.table(samples);
    Ok(())
}
