//! The interpolant `u = lambda d_D + d_Omega^2` between nested convex
//! bodies, adapted frames of its level sets, the volume integrands of the
//! comparison formula and their coarea integration.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::convex_body::ConvexBody;
use crate::error::{Error, Result};
use crate::model_space::{ModelSpace, Point, TangentVector};
use crate::quadrature::{gauss_legendre, AngularGrid};
use crate::sampling::{counter_rng, stream_id};
use crate::surface_calculus::{
    level_geometry, refined_level_set, total_curvature, total_curvature_limit, LimitOptions,
    RadialGraph, ScalarField, SurfaceOptions,
};

/// Relative disagreement between the `h` and `h/2` derivative estimates
/// that marks a stencil crossing a gradient kink.
const KINK_TOL: f64 = 1e-3;
const MAX_JITTERS: u64 = 4;

/// `u(p) = lambda d_D(p) + d_Omega(p)^2` for convex `D` with closure inside
/// `Omega`.
#[derive(Clone, Debug)]
pub struct InterpolantField {
    inner: ConvexBody,
    outer: ConvexBody,
    lambda: f64,
}

/// Value, gradient and the distance data behind them.
#[derive(Clone, Debug)]
pub struct InterpolantValue {
    pub value: f64,
    pub grad: TangentVector,
    pub d_inner: f64,
    pub d_outer: f64,
    /// Unit gradient of `d_D`; `None` inside `D`.
    pub grad_inner: Option<TangentVector>,
    /// Unit gradient of `d_Omega`; `None` inside `Omega`.
    pub grad_outer: Option<TangentVector>,
    /// `|grad u|^2 - (4 d_Omega^2 + lambda^2 + 4 lambda d_Omega <grad d_Omega, grad d_D>)`.
    pub norm_identity_residual: f64,
}

impl InterpolantField {
    pub fn new(inner: ConvexBody, outer: ConvexBody, lambda: f64) -> Result<Self> {
        if inner.space() != outer.space() {
            return Err(Error::InvalidArgument("bodies live in different spaces".into()));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        if !outer.strictly_contains(&inner)? {
            return Err(Error::NotNested);
        }
        Ok(InterpolantField { inner, outer, lambda })
    }

    pub fn inner(&self) -> &ConvexBody {
        &self.inner
    }

    pub fn outer(&self) -> &ConvexBody {
        &self.outer
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        Ok(InterpolantField { lambda, ..self.clone() })
    }
}

pub fn evaluate_interpolant(field: &InterpolantField, p: &Point) -> Result<InterpolantValue> {
    let space = field.inner.space();
    let lam = field.lambda;
    let pi = field.inner.project(p)?;
    if lam > 0.0 && pi.grad.is_none() {
        return Err(Error::InsideBody);
    }
    let po = field.outer.project(p)?;
    let d = po.dist;
    let zero = TangentVector::new(*p, crate::Vector::zeros(space.coord_len()));
    let mut grad = zero;
    if let Some(g) = &pi.grad {
        grad = grad.axpy(lam, g);
    }
    if let Some(g) = &po.grad {
        grad = grad.axpy(2.0 * d, g);
    }
    let cross = match (&pi.grad, &po.grad) {
        (Some(a), Some(b)) => space.inner(a, b),
        _ => 0.0,
    };
    let identity = 4.0 * d * d + lam * lam + 4.0 * lam * d * cross;
    let norm2 = space.inner(&grad, &grad);
    Ok(InterpolantValue {
        value: lam * pi.dist + d * d,
        grad,
        d_inner: pi.dist,
        d_outer: d,
        grad_inner: pi.grad,
        grad_outer: po.grad,
        norm_identity_residual: norm2 - identity,
    })
}

impl ScalarField for InterpolantField {
    fn space(&self) -> &ModelSpace {
        self.inner.space()
    }

    fn value(&self, p: &Point) -> Result<f64> {
        let d = self.outer.distance_to(p)?;
        Ok(self.lambda * self.inner.distance_to(p)? + d * d)
    }

    fn value_grad(&self, p: &Point) -> Result<(f64, TangentVector)> {
        let v = evaluate_interpolant(self, p)?;
        Ok((v.value, v.grad))
    }

    /// The Hessian of `d_D` grows like `1 / d_D` near `D`. The `d_Omega^2`
    /// term has bounded second derivatives and imposes no scale.
    fn feature_scale(&self, p: &Point) -> f64 {
        if self.lambda > 0.0 {
            self.inner.distance_to(p).unwrap_or(0.0)
        } else {
            f64::INFINITY
        }
    }
}

/// The level set `{u = c}` as a radial graph about `base`, which must lie
/// in `D`.
pub fn extract_level_set(
    field: &InterpolantField,
    c: f64,
    base: Point,
    grid: Arc<AngularGrid>,
    opts: SurfaceOptions,
) -> Result<RadialGraph> {
    if !field.inner.contains(&base)? {
        return Err(Error::InvalidArgument("base point must lie in D".into()));
    }
    RadialGraph::level_set(Arc::new(field.clone()), c, base, grid, opts)
}

/// Orthonormal frame `e_1..e_{n-1}, e_n` at a point of a level set, with
/// `e_n = grad u / |grad u|` and `e_i` principal directions.
#[derive(Clone, Debug)]
pub struct AdaptedFrame {
    pub point: Point,
    pub normal: TangentVector,
    pub tangents: Vec<TangentVector>,
    /// Principal curvatures, descending.
    pub kappas: Vec<f64>,
    pub grad_norm: f64,
    /// Finite-difference step that passed the kink test.
    pub step: f64,
    pub halvings: usize,
}

impl AdaptedFrame {
    /// `e_1, .., e_{n-1}, e_n`.
    pub fn vectors(&self) -> Vec<TangentVector> {
        let mut v = self.tangents.clone();
        v.push(self.normal);
        v
    }

    pub fn gram_residual(&self, space: &ModelSpace) -> f64 {
        let v = self.vectors();
        let mut worst = 0.0_f64;
        for (i, a) in v.iter().enumerate() {
            for (j, b) in v.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((space.inner(a, b) - target).abs());
            }
        }
        worst
    }
}

pub fn adapted_frame(field: &dyn ScalarField, p: &Point, h: f64) -> Result<AdaptedFrame> {
    let geo = level_geometry(field, p, h)?;
    Ok(AdaptedFrame {
        point: *p,
        normal: geo.normal,
        tangents: geo.directions,
        kappas: geo.kappas,
        grad_norm: geo.grad_norm,
        step: geo.step,
        halvings: geo.halvings,
    })
}

/// A derivative estimate with its kink diagnostics.
#[derive(Clone, Copy, Debug)]
pub struct KinkedValue {
    pub value: f64,
    /// The `h` and `h/2` estimates never agreed: the stencil sits on a kink.
    pub unresolved: bool,
    pub halvings: usize,
}

/// `|grad u|_j = e_j |grad u|` by central differences along the geodesic
/// through the frame point, with a Richardson check at `h/2`.
pub fn grad_norm_derivative(field: &dyn ScalarField, frame: &AdaptedFrame, j: usize, h: f64) -> Result<f64> {
    Ok(grad_norm_derivative_checked(field, frame, j, h)?.value)
}

pub fn grad_norm_derivative_checked(
    field: &dyn ScalarField,
    frame: &AdaptedFrame,
    j: usize,
    h: f64,
) -> Result<KinkedValue> {
    let space = field.space();
    let dir = frame.tangents.get(j).ok_or(Error::IndexOutOfRange {
        index: j,
        dim: frame.tangents.len(),
    })?;
    let norm_at = |s: f64| -> Result<f64> {
        let q = space.exp_map(&frame.point, &dir.scaled(s))?;
        let (_, g) = field.value_grad(&q)?;
        Ok(space.norm(&g))
    };
    let central = |s: f64| -> Result<f64> { Ok((norm_at(s)? - norm_at(-s)?) / (2.0 * s)) };
    let mut step = h.min(0.02 * field.feature_scale(&frame.point));
    if !(step > 1e-13) {
        return Err(Error::NoConvergence {
            what: "finite-difference step underflow near a nonsmooth set",
            residual: step,
        });
    }
    let mut coarse = central(step)?;
    let mut halvings = 0;
    loop {
        let fine = central(0.5 * step)?;
        if (fine - coarse).abs() <= KINK_TOL * (1.0 + fine.abs()) {
            return Ok(KinkedValue {
                value: (4.0 * fine - coarse) / 3.0,
                unresolved: false,
                halvings,
            });
        }
        step *= 0.5;
        halvings += 1;
        if halvings >= 30 || step < 1e-12 {
            return Ok(KinkedValue {
                value: fine,
                unresolved: true,
                halvings,
            });
        }
        coarse = fine;
    }
}

/// Cofactors of the principal curvatures: `GK_i` omits `kappa_i` and
/// `GK_ij` omits `kappa_i, kappa_j` (zero on the diagonal). Products are
/// formed explicitly so flat directions never divide by zero.
pub fn cofactors(kappas: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let m = kappas.len();
    let omit = |skip: &[usize]| -> f64 {
        kappas
            .iter()
            .enumerate()
            .filter(|(k, _)| !skip.contains(k))
            .map(|(_, x)| *x)
            .product()
    };
    let diag = (0..m).map(|i| omit(&[i])).collect();
    let off = DMatrix::from_fn(m, m, |i, j| if i == j { 0.0 } else { omit(&[i, j]) });
    (diag, off)
}

/// Everything entering the comparison-formula integrands at one point.
#[derive(Clone, Debug)]
pub struct IntegrandSample {
    pub point: Point,
    pub kappas: Vec<f64>,
    pub cofactor_diag: Vec<f64>,
    pub cofactor_off: DMatrix<f64>,
    pub grad_norm: f64,
    pub grad_norm_derivs: Vec<f64>,
    /// `R_{inin}`.
    pub r_inin: Vec<f64>,
    /// `R_{ijin}`, row `i`, column `j`.
    pub r_ijin: DMatrix<f64>,
    /// `sum_i GK_i R_inin`.
    pub term1: f64,
    /// `sum_{i != j} GK_ij (|grad u|_j / |grad u|) R_ijin` over ordered pairs.
    pub term2: f64,
    /// Some finite-difference stencil never cleared the kink test.
    pub unresolved: bool,
    pub halvings: usize,
}

pub fn comparison_integrands(field: &dyn ScalarField, p: &Point, h: f64) -> Result<IntegrandSample> {
    let frame = adapted_frame(field, p, h)?;
    integrands_in_frame(field, &frame, h)
}

/// Integrands assembled in a given adapted frame.
pub fn integrands_in_frame(field: &dyn ScalarField, frame: &AdaptedFrame, h: f64) -> Result<IntegrandSample> {
    let space = field.space();
    let m = frame.tangents.len();
    let (cof, cof_off) = cofactors(&frame.kappas);
    let mut unresolved = false;
    let mut halvings = frame.halvings;
    let mut derivs = Vec::with_capacity(m);
    for j in 0..m {
        let d = grad_norm_derivative_checked(field, frame, j, h)?;
        unresolved |= d.unresolved;
        halvings += d.halvings;
        derivs.push(d.value);
    }
    let e = &frame.tangents;
    let n = &frame.normal;
    let r_inin: Vec<f64> = e.iter().map(|ei| space.riemann(ei, n, ei, n)).collect();
    let r_ijin = DMatrix::from_fn(m, m, |i, j| space.riemann(&e[i], &e[j], &e[i], n));
    let term1 = cof.iter().zip(&r_inin).map(|(c, r)| c * r).sum();
    let mut term2 = 0.0;
    for i in 0..m {
        for j in 0..m {
            if i != j {
                term2 += cof_off[(i, j)] * (derivs[j] / frame.grad_norm) * r_ijin[(i, j)];
            }
        }
    }
    Ok(IntegrandSample {
        point: frame.point,
        kappas: frame.kappas.clone(),
        cofactor_diag: cof,
        cofactor_off: cof_off,
        grad_norm: frame.grad_norm,
        grad_norm_derivs: derivs,
        r_inin,
        r_ijin,
        term1,
        term2,
        unresolved,
        halvings,
    })
}

/// `F_lambda = sum_{i,j} (|grad u|_j / |grad u|) R_ijin` for `n = 3`.
pub fn f_lambda(field: &dyn ScalarField, p: &Point, h: f64) -> Result<f64> {
    if field.space().dim() != 3 {
        return Err(Error::Unsupported("F_lambda is defined for n = 3".into()));
    }
    Ok(f_lambda_of(&comparison_integrands(field, p, h)?))
}

fn f_lambda_of(s: &IntegrandSample) -> f64 {
    let m = s.kappas.len();
    let mut f = 0.0;
    for i in 0..m {
        for j in 0..m {
            f += s.grad_norm_derivs[j] / s.grad_norm * s.r_ijin[(i, j)];
        }
    }
    f
}

/// Controls for coarea integration over a range of level values.
#[derive(Clone, Debug)]
pub struct RegionOptions {
    pub base: Point,
    pub grid: Arc<AngularGrid>,
    pub surface: SurfaceOptions,
    /// Gauss-Legendre order in the level value.
    pub order: usize,
}

/// Totals of a coarea integration and its kink bookkeeping.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RegionTotals {
    pub integrals: Vec<f64>,
    pub samples: usize,
    pub jittered: usize,
    pub unresolved: usize,
}

/// `int f dV` over `{a < u < b}` as `int_a^b dt int_{u = t} f / |grad u| dA`.
pub fn region_integral<F>(field: Arc<dyn ScalarField>, range: (f64, f64), opts: &RegionOptions, f: F) -> Result<f64>
where
    F: Fn(&Point) -> Result<f64> + Sync,
{
    let (a, b) = range;
    if a == b {
        return Ok(0.0);
    }
    let nodes = gauss_legendre(opts.order, a, b)?;
    let mut total = 0.0;
    for (t, wt) in nodes {
        let surface = RadialGraph::level_set(field.clone(), t, opts.base, opts.grid.clone(), opts.surface)?;
        let terms = (0..surface.len())
            .into_par_iter()
            .map(|i| {
                let s = surface.area_sample(i)?;
                Ok(s.weight * s.area_element * f(&s.point)? / s.grad_norm)
            })
            .collect::<Result<Vec<f64>>>()?;
        total += wt * terms.iter().sum::<f64>();
    }
    Ok(total)
}

/// Coarea integrals of `term1` and `term2`. Samples whose stencils sit on a
/// gradient kink are moved to deterministic nearby directions.
pub fn comparison_region_integrals(
    field: Arc<dyn ScalarField>,
    range: (f64, f64),
    opts: &RegionOptions,
) -> Result<RegionTotals> {
    let (a, b) = range;
    let mut out = RegionTotals {
        integrals: vec![0.0, 0.0],
        ..RegionTotals::default()
    };
    if a == b {
        return Ok(out);
    }
    let h = opts.surface.fd_step;
    let nodes = gauss_legendre(opts.order, a, b)?;
    for (level, (t, wt)) in nodes.into_iter().enumerate() {
        let surface = RadialGraph::level_set(field.clone(), t, opts.base, opts.grid.clone(), opts.surface)?;
        let samples = (0..surface.len())
            .into_par_iter()
            .map(|i| jittered_integrands(&surface, field.as_ref(), level as u64, i, h))
            .collect::<Result<Vec<_>>>()?;
        let mut t1 = 0.0;
        let mut t2 = 0.0;
        for (i, (s, jitters)) in samples.iter().enumerate() {
            let a = surface.area_sample(i)?;
            let w = a.weight * a.area_element / s.grad_norm;
            t1 += w * s.term1;
            t2 += w * s.term2;
            out.samples += 1;
            out.jittered += usize::from(*jitters > 0);
            out.unresolved += usize::from(s.unresolved);
        }
        out.integrals[0] += wt * t1;
        out.integrals[1] += wt * t2;
    }
    Ok(out)
}

/// Integrands at grid point `i`, retried at deterministic perturbations of
/// the point within the level set while a stencil straddles a kink.
fn jittered_integrands(
    surface: &RadialGraph,
    field: &dyn ScalarField,
    level: u64,
    i: usize,
    h: f64,
) -> Result<(IntegrandSample, u64)> {
    let space = field.space();
    let p = surface.point(i)?;
    let mut sample = comparison_integrands(field, &p, h)?;
    let mut attempt = 0;
    while sample.unresolved && attempt < MAX_JITTERS {
        attempt += 1;
        let mut rng = counter_rng(level, stream_id("comparison-jitter"), (i as u64) << 8 | attempt);
        let v = space.random_unit(&mut rng, &p);
        let q = space.exp_map(&p, &v.scaled(10.0 * h * rng.gen::<f64>()))?;
        sample = comparison_integrands(field, &q, h)?;
    }
    Ok((sample, attempt))
}

/// One rung of the refinement ladder of a comparison report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RefinementEntry {
    pub grid: String,
    pub fd_step: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
}

/// Both sides of the comparison formula for the region between `D` and
/// the level set `{u = level}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub lhs: f64,
    /// `-int sum_i GK_i R_inin`.
    pub rhs_term1: f64,
    /// `int sum_{i != j} GK_ij (|grad u|_j / |grad u|) R_ijin`.
    pub rhs_term2: f64,
    pub residual: f64,
    /// `lhs - rhs_term2`.
    pub inequality_margin: f64,
    pub refinement_history: Vec<RefinementEntry>,
    pub g_outer: f64,
    pub g_inner: f64,
    pub samples: usize,
    pub jittered: usize,
    pub unresolved: usize,
}

#[derive(Clone, Debug)]
pub struct ComparisonOptions {
    /// Level `c` of the outer hypersurface `{u = c}`.
    pub level: f64,
    /// Base point for all radial graphs; defaults to an interior point of `D`.
    pub base: Option<Point>,
    pub grid: Arc<AngularGrid>,
    pub surface: SurfaceOptions,
    pub order: usize,
    /// Grid doublings (with halved finite-difference steps) after the first
    /// evaluation.
    pub refinements: usize,
    pub limit: LimitOptions,
}

pub fn comparison_identity_report(field: &InterpolantField, opts: &ComparisonOptions) -> Result<ComparisonReport> {
    if !(field.lambda > 0.0) {
        return Err(Error::InvalidArgument(
            "the comparison region needs lambda > 0 so that u vanishes exactly on D".into(),
        ));
    }
    if !(opts.level > 0.0) {
        return Err(Error::InvalidArgument(format!("level must be positive, got {}", opts.level)));
    }
    let base = opts.base.unwrap_or_else(|| field.inner.interior_point());
    if !field.inner.contains(&base)? {
        return Err(Error::InvalidArgument("base point must lie in D".into()));
    }
    let shared: Arc<dyn ScalarField> = Arc::new(field.clone());
    let mut rungs = Vec::new();
    for k in 0..=opts.refinements {
        let factor = 1usize << k;
        let grid = if k == 0 {
            opts.grid.clone()
        } else {
            Arc::new(opts.grid.refined(factor)?)
        };
        let mut surface = opts.surface;
        surface.fd_step /= factor as f64;
        let outer = refined_level_set(shared.clone(), opts.level, base, grid.clone(), surface)?;
        let g_outer = total_curvature(&outer)?;
        let g_inner = total_curvature_limit(&field.inner, grid.clone(), surface, &opts.limit)?.value;
        let region = RegionOptions {
            base,
            grid: grid.clone(),
            surface,
            order: opts.order,
        };
        let totals = comparison_region_integrals(shared.clone(), (0.0, opts.level), &region)?;
        rungs.push((grid.label(), surface.fd_step, g_outer, g_inner, totals));
    }
    let history: Vec<RefinementEntry> = rungs
        .iter()
        .map(|(grid, h, go, gi, t)| {
            let lhs = go - gi;
            let rhs = -t.integrals[0] + t.integrals[1];
            RefinementEntry {
                grid: grid.clone(),
                fd_step: *h,
                lhs,
                rhs,
                residual: (lhs - rhs).abs(),
            }
        })
        .collect();
    let (_, _, g_outer, g_inner, totals) = &rungs[0];
    let lhs = g_outer - g_inner;
    let rhs_term1 = -totals.integrals[0];
    let rhs_term2 = totals.integrals[1];
    Ok(ComparisonReport {
        lhs,
        rhs_term1,
        rhs_term2,
        residual: (lhs - rhs_term1 - rhs_term2).abs(),
        inequality_margin: lhs - rhs_term2,
        refinement_history: history,
        g_outer: *g_outer,
        g_inner: *g_inner,
        samples: totals.samples,
        jittered: totals.jittered,
        unresolved: totals.unresolved,
    })
}

/// One sample of the `n = 3` estimates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateSample {
    pub lambda: f64,
    pub d_outer: f64,
    /// `<grad d_Omega, grad d_D>`.
    pub inner_product: f64,
    /// `|grad u| / (2 d_Omega)`.
    pub grad_ratio: f64,
    /// `max_j ||grad u|_j|`.
    pub max_grad_norm_deriv: f64,
    pub f_lambda: f64,
    pub norm_identity_residual: f64,
    pub jitters: u64,
    pub unresolved: bool,
}

/// Summary of the estimates for one `lambda`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LambdaEstimates {
    pub lambda: f64,
    pub samples: usize,
    pub min_inner_product: f64,
    pub min_grad_ratio: f64,
    pub max_grad_norm_deriv: f64,
    pub max_abs_f_lambda: f64,
    pub max_norm_identity_residual: f64,
    pub jittered: usize,
    pub unresolved: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimatesReport {
    pub per_lambda: Vec<LambdaEstimates>,
    /// `max / min - 1` of `max_grad_norm_deriv` across the lambda sweep.
    pub grad_norm_deriv_spread: f64,
    #[serde(skip)]
    pub samples: Vec<EstimateSample>,
}

/// The three `n = 3` estimates at the given points outside `Omega`, for
/// each `lambda` in the sweep.
pub fn n3_estimates_report(
    field: &InterpolantField,
    lambdas: &[f64],
    points: &[Point],
    h: f64,
) -> Result<EstimatesReport> {
    if field.inner.space().dim() != 3 {
        return Err(Error::Unsupported("the estimates are stated for n = 3".into()));
    }
    let mut per_lambda = Vec::new();
    let mut samples = Vec::new();
    for &lam in lambdas {
        let f = field.with_lambda(lam)?;
        let batch = points
            .par_iter()
            .enumerate()
            .map(|(i, p)| estimate_sample(&f, p, i as u64, h))
            .collect::<Result<Vec<_>>>()?;
        let fold = |g: fn(&EstimateSample) -> f64, init: f64, pick: fn(f64, f64) -> f64| {
            batch.iter().map(g).fold(init, pick)
        };
        per_lambda.push(LambdaEstimates {
            lambda: lam,
            samples: batch.len(),
            min_inner_product: fold(|s| s.inner_product, f64::INFINITY, f64::min),
            min_grad_ratio: fold(|s| s.grad_ratio, f64::INFINITY, f64::min),
            max_grad_norm_deriv: fold(|s| s.max_grad_norm_deriv, 0.0, f64::max),
            max_abs_f_lambda: fold(|s| s.f_lambda.abs(), 0.0, f64::max),
            max_norm_identity_residual: fold(|s| s.norm_identity_residual.abs(), 0.0, f64::max),
            jittered: batch.iter().filter(|s| s.jitters > 0).count(),
            unresolved: batch.iter().filter(|s| s.unresolved).count(),
        });
        samples.extend(batch);
    }
    let maxima: Vec<f64> = per_lambda.iter().map(|l| l.max_grad_norm_deriv).collect();
    let hi = maxima.iter().cloned().fold(0.0, f64::max);
    let lo = maxima.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(EstimatesReport {
        per_lambda,
        grad_norm_deriv_spread: if lo > 0.0 { hi / lo - 1.0 } else { f64::INFINITY },
        samples,
    })
}

fn estimate_sample(field: &InterpolantField, p: &Point, index: u64, h: f64) -> Result<EstimateSample> {
    let space = field.inner.space();
    let mut q = *p;
    let mut jitters = 0;
    loop {
        let v = evaluate_interpolant(field, &q)?;
        let s = comparison_integrands(field, &q, h)?;
        if !s.unresolved || jitters >= MAX_JITTERS {
            let inner_product = match (&v.grad_outer, &v.grad_inner) {
                (Some(a), Some(b)) => space.inner(a, b),
                _ => f64::NAN,
            };
            return Ok(EstimateSample {
                lambda: field.lambda,
                d_outer: v.d_outer,
                inner_product,
                grad_ratio: space.norm(&v.grad) / (2.0 * v.d_outer),
                max_grad_norm_deriv: s.grad_norm_derivs.iter().fold(0.0, |m, x| m.max(x.abs())),
                f_lambda: f_lambda_of(&s),
                norm_identity_residual: v.norm_identity_residual,
                jitters,
                unresolved: s.unresolved,
            });
        }
        jitters += 1;
        let mut rng = counter_rng(index, stream_id("estimate-jitter"), jitters);
        let dir = space.random_unit(&mut rng, p);
        q = space.exp_map(p, &dir.scaled(10.0 * h * rng.gen::<f64>()))?;
    }
}
