//! Hypersurfaces as radial graphs over a direction grid: principal
//! curvatures, Gauss-Kronecker curvature, area, total curvature, outer
//! parallel hypersurfaces and Hausdorff distances.
//!
//! Every surface here is a level set `{F = c}` of a convex scalar field seen
//! from an interior base point. The outward normal is `grad F / |grad F|` and
//! the shape operator is the covariant derivative of that unit field along
//! tangent directions, taken by central differences over short geodesic
//! steps with the results transported back to the foot point.

use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::convex_body::{BodyKind, ConvexBody};
use crate::error::{Error, Result};
use crate::model_space::{lorentz, FrameField, ModelSpace, Point, SpaceKind, TangentVector};
use crate::quadrature::{AngularGrid, Cell};
use crate::vector::Vector;

/// A function on the ambient space with a gradient.
pub trait ScalarField: Send + Sync {
    fn space(&self) -> &ModelSpace;

    fn value(&self, p: &Point) -> Result<f64> {
        Ok(self.value_grad(p)?.0)
    }

    fn value_grad(&self, p: &Point) -> Result<(f64, TangentVector)>;

    /// Distance below which finite-difference steps resolve features of the
    /// field near `p` (its second derivatives vary on this scale).
    fn feature_scale(&self, _p: &Point) -> f64 {
        f64::INFINITY
    }
}

/// `d_X` of a convex body; the gradient is undefined on the body.
impl ScalarField for ConvexBody {
    fn space(&self) -> &ModelSpace {
        ConvexBody::space(self)
    }

    fn value(&self, p: &Point) -> Result<f64> {
        self.distance_to(p)
    }

    fn value_grad(&self, p: &Point) -> Result<(f64, TangentVector)> {
        let pr = self.project(p)?;
        let g = pr.grad.ok_or(Error::InsideBody)?;
        Ok((pr.dist, g))
    }

    fn feature_scale(&self, p: &Point) -> f64 {
        self.distance_to(p).unwrap_or(0.0)
    }
}

/// Distance to a fixed point; its level sets are geodesic spheres.
#[derive(Clone, Debug)]
pub struct PointDistance {
    space: ModelSpace,
    center: Point,
}

impl PointDistance {
    pub fn new(space: &ModelSpace, center: Point) -> Self {
        PointDistance {
            space: space.clone(),
            center,
        }
    }
}

impl ScalarField for PointDistance {
    fn space(&self) -> &ModelSpace {
        &self.space
    }

    fn value(&self, p: &Point) -> Result<f64> {
        self.space.distance(&self.center, p)
    }

    fn value_grad(&self, p: &Point) -> Result<(f64, TangentVector)> {
        let d = self.space.distance(&self.center, p)?;
        Ok((d, self.space.radial_unit(&self.center, p)?))
    }

    fn feature_scale(&self, p: &Point) -> f64 {
        self.space.distance(&self.center, p).unwrap_or(0.0)
    }
}

/// Normal and principal data of the level set of a field through a point.
#[derive(Clone, Debug)]
pub struct LevelGeometry {
    pub point: Point,
    pub value: f64,
    pub grad: TangentVector,
    pub grad_norm: f64,
    /// `grad / |grad|`, pointing towards larger values.
    pub normal: TangentVector,
    /// Principal curvatures, descending.
    pub kappas: Vec<f64>,
    /// Orthonormal principal directions matching `kappas`.
    pub directions: Vec<TangentVector>,
    /// Final (coarse) finite-difference step.
    pub step: f64,
    /// Step halvings forced by curvature jumps.
    pub halvings: usize,
}

fn unit_normal(field: &dyn ScalarField, q: &Point) -> Result<TangentVector> {
    let (_, g) = field.value_grad(q)?;
    let n = field.space().norm(&g);
    if !(n > 1e-10) {
        return Err(Error::VanishingGradient(n));
    }
    Ok(g.scaled(1.0 / n))
}

/// Relative disagreement between step `h` and `h/2` that marks a kink.
const KINK_TOL: f64 = 1e-3;
const MAX_HALVINGS: usize = 30;

/// Covariant difference quotients of the unit normal along `tangents`.
fn normal_difference_matrix(
    field: &dyn ScalarField,
    p: &Point,
    tangents: &[TangentVector],
    step: f64,
) -> Result<DMatrix<f64>> {
    let space = field.space();
    let m = tangents.len();
    let mut a = DMatrix::<f64>::zeros(m, m);
    for (i, t) in tangents.iter().enumerate() {
        let mut diff = Vector::zeros(space.coord_len());
        for sign in [1.0, -1.0] {
            let v = t.scaled(sign * step);
            let q = space.exp_map(p, &v)?;
            let nq = unit_normal(field, &q)?;
            let back = space.transport_back(p, &v, &q, &nq)?;
            diff = diff.axpy(sign, &back.components);
        }
        let d = TangentVector::new(*p, diff * (0.5 / step));
        for (j, s) in tangents.iter().enumerate() {
            a[(i, j)] = space.inner(&d, s);
        }
    }
    Ok((&a + a.transpose()) * 0.5)
}

/// Shape operator of the level set of `field` through `p`.
///
/// Central differences of the unit normal at steps `h` and `h/2` are
/// compared; agreement gives the Richardson combination, disagreement means
/// a stencil straddles a curvature jump and the step is halved until the
/// stencil fits inside one smooth piece. The initial step is capped at 2% of
/// the field's feature scale.
pub fn level_geometry(field: &dyn ScalarField, p: &Point, h: f64) -> Result<LevelGeometry> {
    let space = field.space();
    let (value, grad) = field.value_grad(p)?;
    let grad_norm = space.norm(&grad);
    if !(grad_norm > 1e-10) {
        return Err(Error::VanishingGradient(grad_norm));
    }
    let normal = grad.scaled(1.0 / grad_norm);
    let frame = space.complete_frame(p, &[normal])?;
    let tangents = &frame.vectors[1..];
    let mut step = h.min(0.02 * field.feature_scale(p));
    if !(step > 1e-13) {
        return Err(Error::NoConvergence {
            what: "finite-difference step underflow near a nonsmooth set",
            residual: step,
        });
    }
    let mut coarse = normal_difference_matrix(field, p, tangents, step)?;
    let mut halvings = 0;
    let shape = loop {
        let fine = normal_difference_matrix(field, p, tangents, 0.5 * step)?;
        let gap = (&fine - &coarse).amax();
        let scale = fine.amax();
        if gap <= KINK_TOL * (1.0 + scale) {
            break (&fine * 4.0 - &coarse) / 3.0;
        }
        step *= 0.5;
        halvings += 1;
        if halvings >= MAX_HALVINGS || step < 1e-12 {
            // On the jump set itself; keep the straddling average.
            break fine;
        }
        coarse = fine;
    };
    let m = tangents.len();
    let eig = SymmetricEigen::new(shape);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|x, y| eig.eigenvalues[*y].total_cmp(&eig.eigenvalues[*x]));
    let kappas = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let directions = order
        .iter()
        .map(|&k| {
            let mut acc = TangentVector::new(*p, Vector::zeros(space.coord_len()));
            for (b, t) in tangents.iter().enumerate() {
                acc = acc.axpy(eig.eigenvectors[(b, k)], t);
            }
            acc
        })
        .collect();
    Ok(LevelGeometry {
        point: *p,
        value,
        grad,
        grad_norm,
        normal,
        kappas,
        directions,
        step,
        halvings,
    })
}

/// Finite-difference and root-finding controls.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceOptions {
    /// Absolute geodesic step for normal differences.
    pub fd_step: f64,
    /// Required `|F - c|` at the graph points.
    pub root_tol: f64,
    /// Refinement applied to parallel hypersurfaces.
    pub adaptive: Option<AdaptiveOptions>,
}

impl SurfaceOptions {
    /// Step `1e-4 * diameter`.
    pub fn for_diameter(diameter: f64) -> Self {
        SurfaceOptions {
            fd_step: 1e-4 * diameter,
            root_tol: 1e-10,
            adaptive: Some(AdaptiveOptions::default()),
        }
    }
}

impl Default for SurfaceOptions {
    fn default() -> Self {
        SurfaceOptions {
            fd_step: 1e-4,
            root_tol: 1e-10,
            adaptive: Some(AdaptiveOptions::default()),
        }
    }
}

/// Per-direction geometry of a radial graph.
#[derive(Clone, Debug)]
pub struct SurfacePointData {
    pub index: usize,
    pub point: Point,
    pub radius: f64,
    pub normal: TangentVector,
    pub principal_curvatures: Vec<f64>,
    pub principal_directions: Vec<TangentVector>,
    pub gk: f64,
    /// Area density with respect to the unit-sphere measure at the base.
    pub area_element: f64,
    pub weight: f64,
    /// `int GK dA` over the quadrature cell of this point. Equals
    /// `gk * area_element * weight` except on adaptively refined cells,
    /// where it is the solid angle swept by the cell's corner normals.
    pub curvature_mass: f64,
}

/// First-order data at a graph point.
#[derive(Clone, Debug)]
pub struct AreaSample {
    pub point: Point,
    pub grad: TangentVector,
    pub grad_norm: f64,
    pub area_element: f64,
    pub weight: f64,
}

/// A star-shaped level set `{F = c}` sampled along rays from `base`.
#[derive(Clone)]
pub struct RadialGraph {
    space: ModelSpace,
    base: Point,
    frame: FrameField,
    grid: Arc<AngularGrid>,
    radii: Vec<f64>,
    field: Arc<dyn ScalarField>,
    level: f64,
    opts: SurfaceOptions,
    cache: OnceLock<Vec<SurfacePointData>>,
}

/// Controls for [`RadialGraph::refine_adaptive`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdaptiveOptions {
    /// Relative density difference between neighbours that flags a cell.
    pub jump_tol: f64,
    /// Gauss-image discrepancy per unit solid angle below which a cell is
    /// accepted regardless of `jump_tol`.
    pub abs_tol: f64,
    pub max_depth: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions {
            jump_tol: 0.05,
            abs_tol: 1e-3,
            max_depth: 1,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RefinementStats {
    pub flagged_cells: usize,
    pub added_nodes: usize,
    pub max_depth: usize,
}

struct Leaf {
    direction: Vec<f64>,
    data: SurfacePointData,
    depth: usize,
}

impl fmt::Debug for RadialGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialGraph")
            .field("base", &self.base)
            .field("grid", &self.grid.label())
            .field("level", &self.level)
            .finish()
    }
}

impl RadialGraph {
    /// Extract `{field = level}` by root-finding along every grid ray.
    pub fn level_set(
        field: Arc<dyn ScalarField>,
        level: f64,
        base: Point,
        grid: Arc<AngularGrid>,
        opts: SurfaceOptions,
    ) -> Result<Self> {
        let mut g = Self::unsolved(field, level, base, grid, opts)?;
        let start = g.field.value(&g.base)?;
        if !(start < level) {
            return Err(Error::Bracketing {
                level,
                detail: format!("base value {start} is not below the level"),
            });
        }
        let radii = (0..g.grid.len())
            .into_par_iter()
            .map(|i| g.ray_root(i))
            .collect::<Result<Vec<_>>>()?;
        g.radii = radii;
        Ok(g)
    }

    /// Graph with known radii (no root-finding).
    pub fn with_radii(
        field: Arc<dyn ScalarField>,
        level: f64,
        base: Point,
        grid: Arc<AngularGrid>,
        radii: Vec<f64>,
        opts: SurfaceOptions,
    ) -> Result<Self> {
        if radii.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: radii.len(),
            });
        }
        if radii.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::InvalidArgument("radii must be positive".into()));
        }
        let mut g = Self::unsolved(field, level, base, grid, opts)?;
        g.radii = radii;
        Ok(g)
    }

    fn unsolved(
        field: Arc<dyn ScalarField>,
        level: f64,
        base: Point,
        grid: Arc<AngularGrid>,
        opts: SurfaceOptions,
    ) -> Result<Self> {
        let space = field.space().clone();
        if grid.dim() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                got: grid.dim(),
            });
        }
        // Rejects warped bases away from the origin.
        space.polar_jacobian(&base, 1.0)?;
        let frame = space.standard_frame(&base);
        Ok(RadialGraph {
            space,
            base,
            frame,
            grid,
            radii: Vec::new(),
            field,
            level,
            opts,
            cache: OnceLock::new(),
        })
    }

    pub fn space(&self) -> &ModelSpace {
        &self.space
    }

    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn grid(&self) -> &AngularGrid {
        &self.grid
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn field(&self) -> &dyn ScalarField {
        self.field.as_ref()
    }

    pub fn options(&self) -> SurfaceOptions {
        self.opts
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    fn ray(&self, i: usize) -> TangentVector {
        self.direction_vector(self.grid.direction(i))
    }

    fn direction_vector(&self, dir: &[f64]) -> TangentVector {
        self.space.tangent_from_frame(&self.base, &self.frame, dir)
    }

    /// Point at distance `s` from the base along ray `i`.
    pub fn ray_point(&self, i: usize, s: f64) -> Result<Point> {
        self.space.exp_map(&self.base, &self.ray(i).scaled(s))
    }

    pub fn point(&self, i: usize) -> Result<Point> {
        self.ray_point(i, self.radii[i])
    }

    fn ray_root(&self, i: usize) -> Result<f64> {
        self.root_along(&self.ray(i))
    }

    /// Root of `F(exp(s u)) = c`. Along a ray the convex field is convex in
    /// `s`, so Newton iterates started above the root decrease monotonically
    /// onto it; bisection takes over whenever a step leaves the bracket.
    fn root_along(&self, u: &TangentVector) -> Result<f64> {
        let c = self.level;
        let at = |s: f64| self.space.exp_map(&self.base, &u.scaled(s));
        let f = |s: f64| -> Result<f64> { Ok(self.field.value(&at(s)?)? - c) };
        let mut lo = 0.0;
        let mut hi = 1.0;
        let mut fhi = f(hi)?;
        let mut expansions = 0;
        while fhi <= 0.0 {
            lo = hi;
            hi *= 2.0;
            fhi = f(hi)?;
            expansions += 1;
            if expansions > 60 {
                return Err(Error::Bracketing {
                    level: c,
                    detail: "a ray never reaches the level".into(),
                });
            }
        }
        let target = 1e-14 * c.abs().max(1.0);
        for _ in 0..200 {
            if fhi <= target || hi - lo <= 4.0 * f64::EPSILON * hi {
                break;
            }
            let p = at(hi)?;
            let (_, g) = self.field.value_grad(&p)?;
            let slope = self.space.inner(&g, &self.space.radial_unit(&self.base, &p)?);
            let mut s = if slope > 0.0 { hi - fhi / slope } else { f64::NAN };
            if !(s > lo && s < hi) {
                s = 0.5 * (lo + hi);
            }
            let fs = f(s)?;
            if fs > 0.0 {
                hi = s;
                fhi = fs;
            } else {
                lo = s;
                if fs == 0.0 {
                    hi = s;
                    fhi = 0.0;
                }
            }
        }
        if fhi > self.opts.root_tol {
            return Err(Error::NoConvergence {
                what: "level-set root along a ray",
                residual: fhi,
            });
        }
        Ok(hi)
    }

    /// Principal data, Gauss-Kronecker curvature and area element at grid
    /// point `i`.
    pub fn surface_point_data(&self, i: usize) -> Result<SurfacePointData> {
        if i >= self.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                dim: self.len(),
            });
        }
        self.data_along(i, &self.ray(i), self.radii[i], self.grid.weight(i))
    }

    fn data_along(&self, index: usize, u: &TangentVector, r: f64, weight: f64) -> Result<SurfacePointData> {
        let p = self.space.exp_map(&self.base, &u.scaled(r))?;
        let geo = level_geometry(self.field.as_ref(), &p, self.opts.fd_step)?;
        let radial = self.space.radial_unit(&self.base, &p)?;
        let cos = self.space.inner(&geo.normal, &radial);
        if !(cos > 1e-8) {
            return Err(Error::DegenerateSurface(format!(
                "normal is tangent to ray {index} (cos = {cos})"
            )));
        }
        let jac = self.space.polar_jacobian(&self.base, r)?;
        let area_element = jac.powi(self.space.dim() as i32 - 1) / cos;
        let gk = geo.kappas.iter().product();
        Ok(SurfacePointData {
            index,
            point: p,
            radius: r,
            normal: geo.normal,
            principal_curvatures: geo.kappas,
            principal_directions: geo.directions,
            gk,
            area_element,
            weight,
            curvature_mass: gk * area_element * weight,
        })
    }

    /// Point, field gradient and area element at grid point `i`, without
    /// second-order data.
    pub fn area_sample(&self, i: usize) -> Result<AreaSample> {
        let p = self.point(i)?;
        let (_, grad) = self.field.value_grad(&p)?;
        let grad_norm = self.space.norm(&grad);
        if !(grad_norm > 0.0) {
            return Err(Error::VanishingGradient(grad_norm));
        }
        let radial = self.space.radial_unit(&self.base, &p)?;
        let cos = self.space.inner(&grad, &radial) / grad_norm;
        if !(cos > 1e-8) {
            return Err(Error::DegenerateSurface(format!(
                "normal is tangent to ray {i} (cos = {cos})"
            )));
        }
        let jac = self.space.polar_jacobian(&self.base, self.radii[i])?;
        Ok(AreaSample {
            point: p,
            grad,
            grad_norm,
            area_element: jac.powi(self.space.dim() as i32 - 1) / cos,
            weight: self.grid.weight(i),
        })
    }

    /// Point data for every grid direction, in index order (computed once).
    pub fn point_data(&self) -> Result<&[SurfacePointData]> {
        if let Some(d) = self.cache.get() {
            return Ok(d);
        }
        let data = (0..self.len())
            .into_par_iter()
            .map(|i| self.surface_point_data(i))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.cache.get_or_init(|| data))
    }

    /// One CSV row per grid direction: index, chart coordinates, radius,
    /// principal curvatures, GK, area element and quadrature weight.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        let data = self.point_data()?;
        let coords = data.first().map_or(0, |d| d.point.coords.len());
        let mut header = vec!["index".to_string()];
        header.extend((0..coords).map(|i| format!("x{i}")));
        header.push("radius".into());
        header.extend((1..self.space.dim()).map(|i| format!("kappa{i}")));
        header.extend(["gk", "area_element", "weight"].map(String::from));
        let io = |e: std::io::Error| Error::InvalidArgument(format!("csv output: {e}"));
        writeln!(out, "{}", header.join(",")).map_err(io)?;
        for d in data {
            let mut row = vec![d.index.to_string()];
            row.extend(d.point.coords.iter().map(f64::to_string));
            row.push(d.radius.to_string());
            row.extend(d.principal_curvatures.iter().map(f64::to_string));
            row.extend([d.gk, d.area_element, d.weight].map(|x| x.to_string()));
            writeln!(out, "{}", row.join(",")).map_err(io)?;
        }
        Ok(())
    }

    /// Replace grid cells whose `GK dA` quadrature is unreliable by
    /// subdivided cells carrying Gauss-image masses.
    ///
    /// A cell is flagged when its density differs from a structured
    /// neighbour by more than `jump_tol` relative, or when the solid angle
    /// swept by the normals at its corners disagrees with its quadrature
    /// value. The second test also sees features smaller than a cell.
    /// Flagged cells are split `max_depth` times and each leaf takes the
    /// Gauss image of its corners as its curvature mass.
    pub fn refine_adaptive(&self, opts: &AdaptiveOptions) -> Result<(RadialGraph, RefinementStats)> {
        if !self.grid.is_structured() {
            return Err(Error::Unsupported("adaptive refinement needs a structured grid".into()));
        }
        let dim = self.space.dim();
        let data = self.point_data()?;
        let density: Vec<f64> = data.iter().map(|d| d.gk * d.area_element).collect();
        let jumps = |a: f64, b: f64| (a - b).abs() > opts.jump_tol * a.abs().max(b.abs());
        let flagged = (0..self.len())
            .into_par_iter()
            .map(|i| {
                if self.grid.neighbors(i).iter().any(|&j| jumps(density[i], density[j])) {
                    return Ok(true);
                }
                let cell = self.grid.cell(i).expect("structured cell");
                self.corner_mismatch(cell, &data[i], opts)
            })
            .collect::<Result<Vec<bool>>>()?;
        let leaves = (0..self.len())
            .into_par_iter()
            .filter(|i| flagged[*i])
            .map(|i| self.refine_cell(*self.grid.cell(i).expect("structured cell"), 1, opts))
            .collect::<Result<Vec<_>>>()?;
        let mut directions = Vec::new();
        let mut weights = Vec::new();
        let mut radii = Vec::new();
        let mut cached = Vec::new();
        let mut stats = RefinementStats {
            flagged_cells: leaves.len(),
            ..RefinementStats::default()
        };
        let mut next = leaves.into_iter();
        for i in 0..self.len() {
            if flagged[i] {
                for leaf in next.next().expect("leaves of a flagged cell") {
                    stats.added_nodes += 1;
                    stats.max_depth = stats.max_depth.max(leaf.depth);
                    directions.push(leaf.direction);
                    weights.push(leaf.data.weight);
                    radii.push(leaf.data.radius);
                    cached.push(leaf.data);
                }
            } else {
                directions.push(self.grid.direction(i).to_vec());
                weights.push(self.grid.weight(i));
                radii.push(self.radii[i]);
                cached.push(data[i].clone());
            }
        }
        for (k, d) in cached.iter_mut().enumerate() {
            d.index = k;
        }
        let grid = Arc::new(AngularGrid::from_parts(dim, directions, weights)?);
        let mut out = RadialGraph::with_radii(
            self.field.clone(),
            self.level,
            self.base,
            grid,
            radii,
            self.opts,
        )?;
        out.cache = OnceLock::from(cached);
        Ok((out, stats))
    }

    fn refine_cell(&self, cell: Cell, depth: usize, opts: &AdaptiveOptions) -> Result<Vec<Leaf>> {
        let dim = self.space.dim();
        let mut out = Vec::new();
        for child in cell.split(dim) {
            if depth < opts.max_depth {
                out.extend(self.refine_cell(child, depth + 1, opts)?);
                continue;
            }
            let direction = child.midpoint_direction(dim);
            let u = self.direction_vector(&direction);
            let r = self.root_along(&u)?;
            let mut data = self.data_along(0, &u, r, child.measure(dim))?;
            data.curvature_mass = self.gauss_image(&child, &data.point)?;
            out.push(Leaf { direction, data, depth });
        }
        Ok(out)
    }

    /// Unit normal of the level set where the ray in grid direction `dir`
    /// meets it.
    fn normal_along(&self, dir: &[f64]) -> Result<(Point, TangentVector)> {
        let u = self.direction_vector(dir);
        let r = self.root_along(&u)?;
        let p = self.space.exp_map(&self.base, &u.scaled(r))?;
        let (_, g) = self.field.value_grad(&p)?;
        let norm = self.space.norm(&g);
        if !(norm > 0.0) {
            return Err(Error::VanishingGradient(norm));
        }
        Ok((p, g.scaled(1.0 / norm)))
    }

    /// Solid angle swept by the normals at the corners of `cell`,
    /// transported to `centre`. Unlike `GK dA` at a single point, it stays
    /// accurate on cells crossed by a curvature discontinuity.
    fn gauss_image(&self, cell: &Cell, centre: &Point) -> Result<f64> {
        let dim = self.space.dim();
        let corners: Vec<Cell> = if dim == 2 {
            vec![
                Cell { t1: cell.t0, ..*cell },
                Cell { t0: cell.t1, ..*cell },
            ]
        } else {
            [(cell.z0, cell.t0), (cell.z0, cell.t1), (cell.z1, cell.t1), (cell.z1, cell.t0)]
                .iter()
                .map(|&(z, t)| Cell { z0: z, z1: z, t0: t, t1: t })
                .collect()
        };
        let frame = self.space.standard_frame(centre);
        let mut normals = Vec::with_capacity(corners.len());
        for c in &corners {
            let (q, n) = self.normal_along(&c.midpoint_direction(dim))?;
            let n = self.space.parallel_transport(&q, centre, &n)?;
            normals.push(frame.vectors.iter().map(|e| self.space.inner(e, &n)).collect::<Vec<f64>>());
        }
        Ok(if dim == 2 {
            let (a, b) = (&normals[0], &normals[1]);
            (a[0] * b[1] - a[1] * b[0]).atan2(a[0] * b[0] + a[1] * b[1]).abs()
        } else {
            (triangle_solid_angle(&normals[0], &normals[1], &normals[2])
                + triangle_solid_angle(&normals[0], &normals[2], &normals[3]))
            .abs()
        })
    }

    /// Whether the Gauss image of `cell` disagrees with the quadrature value
    /// of its centre point.
    fn corner_mismatch(&self, cell: &Cell, centre: &SurfacePointData, opts: &AdaptiveOptions) -> Result<bool> {
        let image = self.gauss_image(cell, &centre.point)?;
        let quad = centre.gk * centre.area_element * centre.weight;
        let diff = (image - quad).abs();
        Ok(diff > opts.jump_tol * image.abs().max(quad.abs()) && diff > opts.abs_tol * centre.weight)
    }

    /// Quadrature of `J(r)^n / n`-type radial volume: the volume enclosed by
    /// the graph.
    pub fn enclosed_volume(&self) -> f64 {
        self.radii
            .iter()
            .zip(self.grid.weights())
            .map(|(r, w)| w * radial_volume(&self.space, *r))
            .sum()
    }

    /// `int K dA` over the enclosed region (curves only).
    pub fn enclosed_curvature_integral(&self) -> Result<f64> {
        if self.space.dim() != 2 {
            return Err(Error::Unsupported(
                "enclosed curvature integral is defined for curves".into(),
            ));
        }
        let per_ray = |r: f64| match self.space.kind() {
            SpaceKind::Euclidean => 0.0,
            SpaceKind::ConstantNegative { k } => k * radial_volume(&self.space, r),
            // int_0^r (-phi''/phi) phi ds = phi'(0) - phi'(r).
            SpaceKind::Warped(w) => 1.0 - w.dphi(r),
        };
        Ok(self
            .radii
            .iter()
            .zip(self.grid.weights())
            .map(|(r, w)| w * per_ray(*r))
            .sum())
    }
}

/// Signed solid angle of the spherical triangle with unit vertices `a, b, c`.
fn triangle_solid_angle(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
    let triple = a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0])
        + a[2] * (b[0] * c[1] - b[1] * c[0]);
    2.0 * triple.atan2(1.0 + dot(a, b) + dot(b, c) + dot(c, a))
}

/// `V(r) = int_0^r J(s)^{n-1} ds`, the volume of a unit-solid-angle cone.
pub fn radial_volume(space: &ModelSpace, r: f64) -> f64 {
    let n = space.dim();
    match space.kind() {
        SpaceKind::Euclidean => r.powi(n as i32) / n as f64,
        SpaceKind::ConstantNegative { k } if n <= 3 => {
            let a = 1.0 / (-k).sqrt();
            let x = r / a;
            if n == 2 {
                a * a * 2.0 * (0.5 * x).sinh().powi(2)
            } else {
                a.powi(3) * (0.25 * (2.0 * x).sinh() - 0.5 * x)
            }
        }
        _ => {
            let o = space.origin();
            let steps = 400;
            let h = r / steps as f64;
            let f = |s: f64| space.polar_jacobian(&o, s).unwrap_or(0.0).powi(n as i32 - 1);
            let mut acc = f(0.0) + f(r);
            for i in 1..steps {
                acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
            }
            acc * h / 3.0
        }
    }
}

/// Totals over a surface.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceSummary {
    pub total_curvature: f64,
    pub area: f64,
    pub enclosed_volume: f64,
    pub min_kappa: f64,
    pub max_abs_kappa: f64,
    /// Points with `min kappa < -1e-6 (1 + max |kappa|)`.
    pub convexity_violations: usize,
    pub points: usize,
}

/// Convexity tolerance for principal curvatures.
pub fn curvature_tolerance(max_abs_kappa: f64) -> f64 {
    1e-6 * (1.0 + max_abs_kappa)
}

pub fn summarize(surface: &RadialGraph, data: &[SurfacePointData]) -> SurfaceSummary {
    let mut total = 0.0;
    let mut area = 0.0;
    let mut min_kappa = f64::INFINITY;
    let mut max_abs = 0.0_f64;
    for d in data {
        total += d.curvature_mass;
        area += d.weight * d.area_element;
        for k in &d.principal_curvatures {
            min_kappa = min_kappa.min(*k);
            max_abs = max_abs.max(k.abs());
        }
    }
    let tol = curvature_tolerance(max_abs);
    let convexity_violations = data
        .iter()
        .filter(|d| d.principal_curvatures.iter().any(|k| *k < -tol))
        .count();
    SurfaceSummary {
        total_curvature: total,
        area,
        enclosed_volume: surface.enclosed_volume(),
        min_kappa,
        max_abs_kappa: max_abs,
        convexity_violations,
        points: data.len(),
    }
}

pub fn surface_summary(surface: &RadialGraph) -> Result<SurfaceSummary> {
    Ok(summarize(surface, surface.point_data()?))
}

/// `G = sum GK * dA * w` over the grid (cell masses on refined cells).
pub fn total_curvature(surface: &RadialGraph) -> Result<f64> {
    Ok(surface_summary(surface)?.total_curvature)
}

pub fn area(surface: &RadialGraph) -> Result<f64> {
    Ok(surface_summary(surface)?.area)
}

/// A geodesic sphere with closed-form geometry.
#[derive(Clone, Debug)]
pub struct AnalyticSphere {
    space: ModelSpace,
    center: Point,
    radius: f64,
}

impl AnalyticSphere {
    pub fn new(space: &ModelSpace, center: Point, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidArgument(format!("sphere radius {radius}")));
        }
        space.polar_jacobian(&center, radius)?;
        Ok(AnalyticSphere {
            space: space.clone(),
            center,
            radius,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    /// Sampled copy of the sphere as a level set of the distance to its
    /// centre.
    pub fn graph(&self, grid: Arc<AngularGrid>, opts: SurfaceOptions) -> Result<RadialGraph> {
        let field: Arc<dyn ScalarField> = Arc::new(PointDistance::new(&self.space, self.center));
        let radii = vec![self.radius; grid.len()];
        RadialGraph::with_radii(field, self.radius, self.center, grid, radii, opts)
    }

    fn jacobian_and_derivative(&self) -> (f64, f64) {
        let r = self.radius;
        match self.space.kind() {
            SpaceKind::Euclidean => (r, 1.0),
            SpaceKind::ConstantNegative { k } => {
                let a = 1.0 / (-k).sqrt();
                (a * (r / a).sinh(), (r / a).cosh())
            }
            SpaceKind::Warped(w) => (w.phi(r), w.dphi(r)),
        }
    }

    /// Every principal curvature equals `J'(r) / J(r)`.
    pub fn principal_curvature(&self) -> f64 {
        let (j, dj) = self.jacobian_and_derivative();
        dj / j
    }

    pub fn exact_area(&self) -> f64 {
        let n = self.space.dim();
        let (j, _) = self.jacobian_and_derivative();
        crate::unit_sphere_volume(n).unwrap_or(f64::NAN) * j.powi(n as i32 - 1)
    }

    /// `|S^{n-1}| J'(r)^{n-1}`.
    pub fn exact_total_curvature(&self) -> f64 {
        let n = self.space.dim();
        let (_, dj) = self.jacobian_and_derivative();
        crate::unit_sphere_volume(n).unwrap_or(f64::NAN) * dj.powi(n as i32 - 1)
    }
}

/// The outer parallel hypersurface `{d_body = t}`.
pub fn parallel_hypersurface(
    body: &ConvexBody,
    t: f64,
    grid: Arc<AngularGrid>,
    opts: SurfaceOptions,
) -> Result<RadialGraph> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("parallel distance must be positive, got {t}")));
    }
    let field: Arc<dyn ScalarField> = Arc::new(body.clone());
    refined_level_set(field, t, body.interior_point(), grid, opts)
}

/// Level set `{F = c}` with the adaptive refinement of `opts` applied. A
/// refined surface lives on the midpoint-cell grid of the same shape.
pub fn refined_level_set(
    field: Arc<dyn ScalarField>,
    level: f64,
    base: Point,
    grid: Arc<AngularGrid>,
    opts: SurfaceOptions,
) -> Result<RadialGraph> {
    match opts.adaptive {
        Some(a) if grid.is_structured() => {
            let grid = Arc::new(grid.to_midpoint()?);
            let surface = RadialGraph::level_set(field, level, base, grid, opts)?;
            Ok(surface.refine_adaptive(&a)?.0)
        }
        _ => RadialGraph::level_set(field, level, base, grid, opts),
    }
}

/// Controls for the `t -> 0` limit of parallel-surface totals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimitOptions {
    pub t0: f64,
    pub levels: usize,
    /// Stop once successive extrapolants differ by less than this.
    pub tol: f64,
    /// Allowed decrease of `G(Gamma_t)` as `t` grows.
    pub monotone_tol: f64,
}

impl Default for LimitOptions {
    fn default() -> Self {
        LimitOptions {
            t0: 0.2,
            levels: 4,
            tol: 1e-3,
            monotone_tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureLimit {
    /// Parallel distances, decreasing.
    pub t_values: Vec<f64>,
    pub totals: Vec<f64>,
    /// Diagonal of the Richardson table.
    pub extrapolants: Vec<f64>,
    pub value: f64,
    pub converged: bool,
    pub monotone: bool,
}

/// `G(boundary) = lim_{t -> 0} G(Gamma_t)` by Richardson extrapolation over
/// halving `t`. Balls use their boundary sphere directly.
pub fn total_curvature_limit(
    body: &ConvexBody,
    grid: Arc<AngularGrid>,
    opts: SurfaceOptions,
    limit: &LimitOptions,
) -> Result<CurvatureLimit> {
    if let BodyKind::GeodesicBall { center, radius } = body.kind() {
        let sphere = AnalyticSphere::new(body.space(), *center, *radius)?;
        let value = total_curvature(&sphere.graph(grid, opts)?)?;
        return Ok(CurvatureLimit {
            t_values: vec![0.0],
            totals: vec![value],
            extrapolants: vec![value],
            value,
            converged: true,
            monotone: true,
        });
    }
    if limit.levels == 0 || !(limit.t0 > 0.0) {
        return Err(Error::InvalidArgument("limit needs t0 > 0 and at least one level".into()));
    }
    let mut t_values = Vec::new();
    let mut totals = Vec::new();
    let mut table: Vec<Vec<f64>> = Vec::new();
    let mut extrapolants = Vec::new();
    let mut converged = false;
    let mut t = limit.t0;
    for k in 0..limit.levels {
        let g = total_curvature(&parallel_hypersurface(body, t, grid.clone(), opts)?)?;
        t_values.push(t);
        totals.push(g);
        let mut row = vec![g];
        for j in 1..=k {
            let prev = &table[k - 1];
            let f = 2f64.powi(j as i32);
            row.push(row[j - 1] + (row[j - 1] - prev[j - 1]) / (f - 1.0));
        }
        extrapolants.push(row[k]);
        table.push(row);
        if k > 0 && (extrapolants[k] - extrapolants[k - 1]).abs() < limit.tol {
            converged = true;
            break;
        }
        t *= 0.5;
    }
    let monotone = totals
        .windows(2)
        .all(|w| w[1] <= w[0] + limit.monotone_tol);
    Ok(CurvatureLimit {
        value: *extrapolants.last().unwrap(),
        t_values,
        totals,
        extrapolants,
        converged,
        monotone,
    })
}

/// Discrete Hausdorff distance between the sampled point sets.
pub fn hausdorff_distance(a: &RadialGraph, b: &RadialGraph) -> Result<f64> {
    let space = a.space();
    let pa = (0..a.len()).map(|i| a.point(i)).collect::<Result<Vec<_>>>()?;
    let pb = (0..b.len()).map(|i| b.point(i)).collect::<Result<Vec<_>>>()?;
    let one_sided = |xs: &[Point], ys: &[Point]| -> Result<f64> {
        let worst = xs
            .par_iter()
            .map(|x| nearest(space, x, ys))
            .collect::<Result<Vec<_>>>()?;
        Ok(worst.into_iter().fold(0.0, f64::max))
    };
    Ok(one_sided(&pa, &pb)?.max(one_sided(&pb, &pa)?))
}

fn nearest(space: &ModelSpace, x: &Point, ys: &[Point]) -> Result<f64> {
    match space.kind() {
        SpaceKind::Euclidean => Ok(ys
            .iter()
            .map(|y| (x.coords - y.coords).norm_squared())
            .fold(f64::INFINITY, f64::min)
            .sqrt()),
        SpaceKind::ConstantNegative { .. } => {
            // -<x, y>_L is increasing in the distance.
            let best = ys
                .iter()
                .min_by(|p, q| {
                    (-lorentz(&x.coords, &p.coords)).total_cmp(&-lorentz(&x.coords, &q.coords))
                })
                .ok_or(Error::InvalidArgument("empty point set".into()))?;
            space.distance(x, best)
        }
        SpaceKind::Warped(_) => {
            let mut best = f64::INFINITY;
            for y in ys {
                best = best.min(space.distance(x, y)?);
            }
            Ok(best)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_sphere_point_data() {
        let e = ModelSpace::euclidean(3).unwrap();
        let s = AnalyticSphere::new(&e, e.origin(), 2.0).unwrap();
        let grid = Arc::new(AngularGrid::sphere(6, 8).unwrap());
        let g = s.graph(grid, SurfaceOptions::for_diameter(4.0)).unwrap();
        let d = g.surface_point_data(5).unwrap();
        for k in &d.principal_curvatures {
            assert!((k - 0.5).abs() < 1e-7);
        }
        assert!((d.gk - 0.25).abs() < 1e-7);
        assert!((d.area_element - 4.0).abs() < 1e-12);
        assert!(g.surface_point_data(48).is_err());
    }

    #[test]
    fn level_set_root_finding() {
        let h = ModelSpace::constant_negative(3, -1.0).unwrap();
        let ball = ConvexBody::ball(&h, h.origin(), 0.5).unwrap();
        let grid = Arc::new(AngularGrid::sphere(4, 6).unwrap());
        let g = parallel_hypersurface(&ball, 0.3, grid, SurfaceOptions::default()).unwrap();
        for r in g.radii() {
            assert!((r - 0.8).abs() < 1e-10);
        }
        let field: Arc<dyn ScalarField> = Arc::new(ball.clone());
        let bad = RadialGraph::level_set(
            field,
            0.3,
            h.point_from_polar(&[3.0, 0.0, 0.0]).unwrap(),
            Arc::new(AngularGrid::sphere(4, 6).unwrap()),
            SurfaceOptions::default(),
        );
        assert!(matches!(bad, Err(Error::Bracketing { .. })));
    }

    #[test]
    fn radial_volume_matches_ball_volume() {
        for space in [
            ModelSpace::euclidean(3).unwrap(),
            ModelSpace::constant_negative(3, -2.0).unwrap(),
            ModelSpace::constant_negative(2, -0.5).unwrap(),
        ] {
            let n = space.dim();
            let v = crate::unit_sphere_volume(n).unwrap() * radial_volume(&space, 1.3);
            assert!((v - space.ball_volume(1.3)).abs() < 1e-9 * v);
        }
    }
}
