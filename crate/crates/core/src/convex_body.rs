//! Compact convex bodies, their distance functions and nearest-point
//! projections.
//!
//! Two shapes are supported: geodesic balls (every space) and geodesic convex
//! hulls of finitely many vertices (Euclidean and hyperbolic spaces). On the
//! hyperboloid a geodesic hull is the intersection of the sheet with the
//! Euclidean convex cone spanned by the vertex vectors, so membership and
//! projection reduce to linear algebra on that cone.
//!
//! Hull projections are computed exactly over the face lattice: the foot of
//! an exterior point is the metric projection onto the span of the face whose
//! relative interior contains it, and that projection is linear (Euclidean
//! affine projection, or Lorentz-orthogonal projection followed by
//! renormalisation on the hyperboloid). The projected-gradient route over
//! barycentric weights is kept as [`ConvexBody::project_iterative`].

use std::collections::BTreeSet;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model_space::{lorentz, ModelSpace, Point, SpaceKind, TangentVector};
use crate::optim::{projected_gradient, PgOptions, PgOutcome};
use crate::vector::{Vector, MAX_COORDS};

const MEMBERSHIP_TOL: f64 = 1e-12;
const WEIGHT_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub enum BodyKind {
    GeodesicBall { center: Point, radius: f64 },
    GeodesicHull { vertices: Vec<Point> },
}

/// Supporting half-space `normal . x <= offset` (chart / ambient coordinates).
#[derive(Clone, Debug)]
struct Facet {
    normal: Vector,
    offset: f64,
    vertices: Vec<usize>,
}

/// A face of the hull with the data needed to project onto its span.
#[derive(Clone, Debug)]
struct Face {
    vertices: Vec<usize>,
    /// Inverse Gram matrix, row-major `m x m`.
    gram_inv: Vec<f64>,
    /// Euclidean: edge vectors `v_j - v_0`; hyperbolic: the vertex vectors.
    spanning: Vec<Vector>,
}

#[derive(Clone, Debug)]
struct HullData {
    facets: Vec<Facet>,
    faces: Vec<Face>,
}

#[derive(Clone, Debug)]
pub struct ConvexBody {
    space: ModelSpace,
    kind: BodyKind,
    hull: Option<HullData>,
}

/// Foot point, distance and unit distance gradient of a projection.
#[derive(Clone, Copy, Debug)]
pub struct ProjectionResult {
    pub foot: Point,
    pub dist: f64,
    /// `grad d_X = -log_p(foot) / d_X`, only defined off the body.
    pub grad: Option<TangentVector>,
}

impl ConvexBody {
    pub fn ball(space: &ModelSpace, center: Point, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidBody(format!("ball radius {radius} must be positive")));
        }
        if center.coords.len() != space.coord_len() {
            return Err(Error::DimensionMismatch {
                expected: space.coord_len(),
                got: center.coords.len(),
            });
        }
        Ok(ConvexBody {
            space: space.clone(),
            kind: BodyKind::GeodesicBall { center, radius },
            hull: None,
        })
    }

    pub fn hull(space: &ModelSpace, vertices: Vec<Point>) -> Result<Self> {
        if let SpaceKind::Warped(_) = space.kind() {
            return Err(Error::Unsupported(
                "geodesic hulls are only available in Euclidean and constant-curvature spaces".into(),
            ));
        }
        let n = space.dim();
        if vertices.len() < n + 1 {
            return Err(Error::InvalidBody(format!(
                "a hull in dimension {n} needs at least {} vertices, got {}",
                n + 1,
                vertices.len()
            )));
        }
        for v in &vertices {
            if v.coords.len() != space.coord_len() {
                return Err(Error::DimensionMismatch {
                    expected: space.coord_len(),
                    got: v.coords.len(),
                });
            }
        }
        for i in 0..vertices.len() {
            for j in 0..i {
                if space.distance(&vertices[i], &vertices[j])? < 1e-9 {
                    return Err(Error::InvalidBody(format!("vertices {j} and {i} coincide")));
                }
            }
        }
        let hyperbolic = matches!(space.kind(), SpaceKind::ConstantNegative { .. });
        let hull = build_hull(&vertices, n, hyperbolic)?;
        Ok(ConvexBody {
            space: space.clone(),
            kind: BodyKind::GeodesicHull { vertices },
            hull: Some(hull),
        })
    }

    pub fn space(&self) -> &ModelSpace {
        &self.space
    }

    pub fn kind(&self) -> &BodyKind {
        &self.kind
    }

    fn is_hyperbolic(&self) -> bool {
        matches!(self.space.kind(), SpaceKind::ConstantNegative { .. })
    }

    /// A point in the interior: the ball centre or the normalised vertex
    /// centroid.
    pub fn interior_point(&self) -> Point {
        match &self.kind {
            BodyKind::GeodesicBall { center, .. } => *center,
            BodyKind::GeodesicHull { vertices } => {
                let mut acc = Vector::zeros(self.space.coord_len());
                for v in vertices {
                    acc += v.coords;
                }
                let acc = acc * (1.0 / vertices.len() as f64);
                if self.is_hyperbolic() {
                    let a2 = -lorentz(&vertices[0].coords, &vertices[0].coords);
                    let scale = (a2 / -lorentz(&acc, &acc)).sqrt();
                    self.space.normalize_point(Point::new(acc * scale))
                } else {
                    Point::new(acc)
                }
            }
        }
    }

    /// Largest distance between two points of the body.
    pub fn diameter(&self) -> Result<f64> {
        match &self.kind {
            BodyKind::GeodesicBall { radius, .. } => Ok(2.0 * radius),
            BodyKind::GeodesicHull { vertices } => {
                let mut d = 0.0_f64;
                for i in 0..vertices.len() {
                    for j in 0..i {
                        d = d.max(self.space.distance(&vertices[i], &vertices[j])?);
                    }
                }
                Ok(d)
            }
        }
    }

    pub fn contains(&self, p: &Point) -> Result<bool> {
        match &self.kind {
            BodyKind::GeodesicBall { center, radius } => {
                Ok(self.space.distance(center, p)? <= *radius)
            }
            BodyKind::GeodesicHull { .. } => Ok(self.facet_excess(p) <= 0.0),
        }
    }

    /// Largest normalised violation of the facet inequalities (`<= 0` inside).
    fn facet_excess(&self, p: &Point) -> f64 {
        let hull = self.hull.as_ref().expect("hull data");
        let scale = p.coords.norm().max(1.0);
        hull.facets
            .iter()
            .map(|f| (f.normal.dot(&p.coords) - f.offset) / scale - MEMBERSHIP_TOL)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Nearest-point projection with distance and distance gradient.
    pub fn project(&self, p: &Point) -> Result<ProjectionResult> {
        if p.coords.len() != self.space.coord_len() {
            return Err(Error::DimensionMismatch {
                expected: self.space.coord_len(),
                got: p.coords.len(),
            });
        }
        let (foot, dist) = match &self.kind {
            BodyKind::GeodesicBall { center, radius } => {
                let out = self.space.log_map(center, p)?;
                let s = self.space.norm(&out);
                if s <= *radius {
                    (*p, 0.0)
                } else {
                    let foot = self.space.exp_map(center, &out.scaled(radius / s))?;
                    (foot, s - radius)
                }
            }
            BodyKind::GeodesicHull { .. } => {
                if self.contains(p)? {
                    (*p, 0.0)
                } else {
                    self.project_onto_faces(p)?
                }
            }
        };
        let grad = if dist > 0.0 {
            Some(self.unit_gradient(p, &foot, dist)?)
        } else {
            None
        };
        Ok(ProjectionResult { foot, dist, grad })
    }

    fn unit_gradient(&self, p: &Point, foot: &Point, dist: f64) -> Result<TangentVector> {
        if let BodyKind::GeodesicBall { center, .. } = &self.kind {
            // Radial direction from the centre; avoids dividing tiny logs.
            return self.space.radial_unit(center, p);
        }
        let back = self.space.log_map(p, foot)?;
        let n = self.space.norm(&back);
        let scale = if n > 0.0 { n } else { dist };
        Ok(back.scaled(-1.0 / scale))
    }

    fn project_onto_faces(&self, p: &Point) -> Result<(Point, f64)> {
        let hull = self.hull.as_ref().expect("hull data");
        let vertices = match &self.kind {
            BodyKind::GeodesicHull { vertices } => vertices,
            _ => unreachable!(),
        };
        let hyperbolic = self.is_hyperbolic();
        let mut best: Option<(f64, Vector)> = None;
        for face in &hull.faces {
            let cand = if hyperbolic {
                face_projection_lorentz(face, &p.coords)
            } else {
                face_projection_affine(face, &vertices[face.vertices[0]].coords, &p.coords)
            };
            if let Some((score, foot)) = cand {
                if best.as_ref().is_none_or(|(b, _)| score < *b) {
                    best = Some((score, foot));
                }
            }
        }
        let (_, foot) = best.ok_or(Error::NoConvergence {
            what: "hull projection (no admissible face)",
            residual: f64::NAN,
        })?;
        let foot = self.space.normalize_point(Point::new(foot));
        let dist = self.space.distance(p, &foot)?;
        Ok((foot, dist))
    }

    /// Projection by projected gradient over barycentric weights with
    /// deterministic multi-start (barycentre and every vertex).
    pub fn project_iterative(&self, p: &Point, opts: &PgOptions) -> Result<(ProjectionResult, PgOutcome)> {
        let vertices = match &self.kind {
            BodyKind::GeodesicHull { vertices } => vertices,
            BodyKind::GeodesicBall { .. } => {
                return Err(Error::Unsupported("iterative projection applies to hulls".into()))
            }
        };
        let m = vertices.len();
        let hyperbolic = self.is_hyperbolic();
        let x = p.coords;
        let combine = |w: &[f64]| -> Vector {
            let mut acc = Vector::zeros(x.len());
            for (wi, v) in w.iter().zip(vertices) {
                acc = acc.axpy(*wi, &v.coords);
            }
            acc
        };
        let fg = |w: &[f64]| -> (f64, Vec<f64>) {
            let y = combine(w);
            if hyperbolic {
                // f = -<p, y>_L / sqrt(-<y, y>_L), monotone in the distance.
                let l = -lorentz(&y, &y);
                let py = lorentz(&x, &y);
                let f = -py / l.sqrt();
                let g = vertices
                    .iter()
                    .map(|v| {
                        let pv = lorentz(&x, &v.coords);
                        let yv = lorentz(&y, &v.coords);
                        -pv / l.sqrt() - py * yv / l.powf(1.5)
                    })
                    .collect();
                (f, g)
            } else {
                let r = y - x;
                let g = vertices.iter().map(|v| 2.0 * r.dot(&v.coords)).collect();
                (r.norm_squared(), g)
            }
        };
        let mut starts = vec![vec![1.0 / m as f64; m]];
        for i in 0..m {
            let mut s = vec![0.0; m];
            s[i] = 1.0;
            starts.push(s);
        }
        let mut best: Option<PgOutcome> = None;
        let mut last_err = None;
        for s in &starts {
            match projected_gradient(fg, s, opts) {
                Ok(out) => {
                    if best.as_ref().is_none_or(|b| out.value < b.value) {
                        best = Some(out);
                    }
                }
                Err(e) => last_err = Some(e),
            }
        }
        let best = match best {
            Some(b) => b,
            None => return Err(last_err.unwrap()),
        };
        let y = combine(&best.weights);
        let foot = if hyperbolic {
            let a2 = -lorentz(&vertices[0].coords, &vertices[0].coords);
            self.space
                .normalize_point(Point::new(y * (a2 / -lorentz(&y, &y)).sqrt()))
        } else {
            Point::new(y)
        };
        let dist = self.space.distance(p, &foot)?;
        let grad = if dist > 1e-12 {
            Some(self.unit_gradient(p, &foot, dist)?)
        } else {
            None
        };
        Ok((ProjectionResult { foot, dist, grad }, best))
    }

    /// `d_X(p)`.
    pub fn distance_to(&self, p: &Point) -> Result<f64> {
        Ok(self.project(p)?.dist)
    }

    /// Unit gradient of `d_X`; an error on or inside the body.
    pub fn grad_distance(&self, p: &Point) -> Result<TangentVector> {
        self.project(p)?.grad.ok_or(Error::InsideBody)
    }

    /// `grad d_X^2 = -2 log_p(foot)`, zero on the body.
    pub fn grad_distance_squared(&self, p: &Point) -> Result<TangentVector> {
        let pr = self.project(p)?;
        match pr.grad {
            Some(g) => Ok(g.scaled(2.0 * pr.dist)),
            None => Ok(TangentVector::new(*p, Vector::zeros(self.space.coord_len()))),
        }
    }

    /// True when `inner`'s closure lies in the interior of `self`.
    pub fn strictly_contains(&self, inner: &ConvexBody) -> Result<bool> {
        match &inner.kind {
            BodyKind::GeodesicHull { vertices } => {
                for v in vertices {
                    if !self.interior_margin(v, 0.0)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            BodyKind::GeodesicBall { center, radius } => self.interior_margin(center, *radius),
        }
    }

    /// Whether the closed ball of radius `margin` about `p` lies in the
    /// interior.
    fn interior_margin(&self, p: &Point, margin: f64) -> Result<bool> {
        match &self.kind {
            BodyKind::GeodesicBall { center, radius } => {
                Ok(self.space.distance(center, p)? + margin < *radius)
            }
            BodyKind::GeodesicHull { .. } => {
                let hull = self.hull.as_ref().expect("hull data");
                let need = margin.max(1e-12);
                if hull.facets.iter().any(|f| self.signed_facet_distance(f, p) >= -need) {
                    return Ok(false);
                }
                Ok(true)
            }
        }
    }

    /// Signed geodesic distance from `p` to a facet hyperplane (negative
    /// inside).
    fn signed_facet_distance(&self, f: &Facet, p: &Point) -> f64 {
        let ell = f.normal.dot(&p.coords) - f.offset;
        if self.is_hyperbolic() {
            // normal . x = <m, x>_L with m = J normal.
            let mut m = f.normal;
            m[0] = -m[0];
            let mm = lorentz(&m, &m).sqrt();
            let a = (-lorentz(&p.coords, &p.coords)).sqrt();
            a * (ell / (a * mm)).asinh()
        } else {
            ell / f.normal.norm()
        }
    }

    pub fn num_facets(&self) -> usize {
        self.hull.as_ref().map_or(0, |h| h.facets.len())
    }
}

fn build_hull(vertices: &[Point], n: usize, hyperbolic: bool) -> Result<HullData> {
    let m = vertices.len();
    let coords: Vec<Vector> = vertices.iter().map(|v| v.coords).collect();
    let len = coords[0].len();

    // Full dimensionality.
    let rank_rows: Vec<Vector> = if hyperbolic {
        coords.clone()
    } else {
        coords[1..].iter().map(|c| *c - coords[0]).collect()
    };
    let mat = DMatrix::from_fn(rank_rows.len(), len, |i, j| rank_rows[i][j]);
    let sv = mat.svd(false, false).singular_values;
    let smax = sv.max();
    let need = if hyperbolic { n + 1 } else { n };
    let rank = sv.iter().filter(|s| **s > 1e-9 * smax).count();
    if rank < need {
        return Err(Error::InvalidBody(format!(
            "vertices span only {rank} of {need} dimensions"
        )));
    }

    let mut centroid = Vector::zeros(len);
    for c in &coords {
        centroid += *c;
    }
    let centroid = centroid * (1.0 / m as f64);

    let mut facets = Vec::new();
    let mut seen: BTreeSet<Vec<i64>> = BTreeSet::new();
    for subset in combinations(m, n) {
        let rows: Vec<Vector> = if hyperbolic {
            subset.iter().map(|&i| coords[i]).collect()
        } else {
            subset[1..].iter().map(|&i| coords[i] - coords[subset[0]]).collect()
        };
        let Some(mut normal) = null_vector(&rows, len) else {
            continue;
        };
        let mut offset = if hyperbolic {
            0.0
        } else {
            normal.dot(&coords[subset[0]])
        };
        if normal.dot(&centroid) > offset {
            normal = -normal;
            offset = -offset;
        }
        let scale = coords.iter().map(|c| c.norm()).fold(1.0, f64::max);
        let supporting = coords
            .iter()
            .all(|c| normal.dot(c) - offset <= 1e-10 * scale);
        if !supporting {
            continue;
        }
        let on: Vec<usize> = (0..m)
            .filter(|&i| (normal.dot(&coords[i]) - offset).abs() <= 1e-10 * scale)
            .collect();
        let key: Vec<i64> = normal
            .iter()
            .chain(std::iter::once(&offset))
            .map(|x| (x * 1e8).round() as i64)
            .collect();
        if seen.insert(key) {
            facets.push(Facet {
                normal,
                offset,
                vertices: on,
            });
        }
    }
    if facets.is_empty() {
        return Err(Error::InvalidBody("no supporting facets found".into()));
    }

    // Faces: all subsets of size <= n of each facet's vertex set whose
    // spanning vectors are independent.
    let mut face_sets: BTreeSet<Vec<usize>> = BTreeSet::new();
    for f in &facets {
        for k in 1..=n.min(f.vertices.len()) {
            for sub in combinations(f.vertices.len(), k) {
                face_sets.insert(sub.iter().map(|&i| f.vertices[i]).collect());
            }
        }
    }
    let mut faces = Vec::new();
    for set in face_sets {
        let spanning: Vec<Vector> = if hyperbolic {
            set.iter().map(|&i| coords[i]).collect()
        } else {
            set[1..].iter().map(|&i| coords[i] - coords[set[0]]).collect()
        };
        let k = spanning.len();
        let gram = DMatrix::from_fn(k, k, |i, j| {
            if hyperbolic {
                lorentz(&spanning[i], &spanning[j])
            } else {
                spanning[i].dot(&spanning[j])
            }
        });
        let gram_inv = if k == 0 {
            Vec::new()
        } else {
            match gram.try_inverse() {
                Some(inv) => (0..k * k).map(|idx| inv[(idx / k, idx % k)]).collect(),
                None => continue,
            }
        };
        faces.push(Face {
            vertices: set,
            gram_inv,
            spanning,
        });
    }
    Ok(HullData { facets, faces })
}

/// Unit vector orthogonal (Euclidean dot) to all `rows`, if they are
/// independent.
fn null_vector(rows: &[Vector], len: usize) -> Option<Vector> {
    let k = rows.len();
    let mut mat = DMatrix::<f64>::zeros(len, len);
    for (i, r) in rows.iter().enumerate() {
        for j in 0..len {
            mat[(i, j)] = r[j];
        }
    }
    let svd = mat.svd(false, true);
    let vt = svd.v_t?;
    let sv = &svd.singular_values;
    let smax = sv.max();
    // Singular values are sorted descending; the k-th must be non-zero.
    if k > 0 && sv[k - 1] <= 1e-10 * smax.max(1e-300) {
        return None;
    }
    let mut out = Vector::zeros(len);
    for j in 0..len {
        out[j] = vt[(len - 1, j)];
    }
    Some(out)
}

/// Affine projection onto the span of a Euclidean face.
fn face_projection_affine(face: &Face, v0: &Vector, p: &Vector) -> Option<(f64, Vector)> {
    let k = face.spanning.len();
    let d = *p - *v0;
    let mut b = [0.0; MAX_COORDS];
    for (i, e) in face.spanning.iter().enumerate() {
        b[i] = e.dot(&d);
    }
    let mut foot = *v0;
    let mut sum = 0.0;
    for i in 0..k {
        let c: f64 = (0..k).map(|j| face.gram_inv[i * k + j] * b[j]).sum();
        if c < -WEIGHT_TOL {
            return None;
        }
        sum += c;
        foot = foot.axpy(c, &face.spanning[i]);
    }
    if 1.0 - sum < -WEIGHT_TOL {
        return None;
    }
    Some(((*p - foot).norm_squared(), foot))
}

/// Lorentz-orthogonal projection onto the linear span of a hyperbolic face,
/// scored by `-<p, foot>_L` (monotone in the distance).
fn face_projection_lorentz(face: &Face, p: &Vector) -> Option<(f64, Vector)> {
    let k = face.spanning.len();
    let mut b = [0.0; MAX_COORDS];
    for (i, v) in face.spanning.iter().enumerate() {
        b[i] = lorentz(v, p);
    }
    let mut y = Vector::zeros(p.len());
    for i in 0..k {
        let c: f64 = (0..k).map(|j| face.gram_inv[i * k + j] * b[j]).sum();
        if c < -WEIGHT_TOL {
            return None;
        }
        y = y.axpy(c, &face.spanning[i]);
    }
    let yy = -lorentz(&y, &y);
    if !(yy > 0.0) || y[0] <= 0.0 {
        return None;
    }
    let a2 = -lorentz(&face.spanning[0], &face.spanning[0]);
    let foot = y * (a2 / yy).sqrt();
    Some((-lorentz(p, &foot), foot))
}

/// All `k`-subsets of `0..m` in lexicographic order.
fn combinations(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k == 0 || k > m {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        while i > 0 && idx[i - 1] == m - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// One log-scale histogram bin of Lipschitz ratios.
#[derive(Clone, Debug, PartialEq)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Clone, Debug)]
pub struct LipschitzStats {
    /// Pairs in the base sweep; `2 * pairs` are evaluated.
    pub pairs: usize,
    pub skipped: usize,
    /// Maximum ratio over the first `pairs` samples.
    pub max_ratio_base: f64,
    /// Maximum ratio over all `2 * pairs` samples.
    pub max_ratio: f64,
    pub relative_change: f64,
    pub stabilized: bool,
    pub histogram: Vec<HistogramBin>,
}

/// Relative change of the maximum under doubling that counts as stable.
pub const LIPSCHITZ_STABILITY: f64 = 0.05;

/// Empirical Lipschitz constant of a vector field,
/// `max |F(p) - T_{q->p} F(q)| / dist(p, q)` over sampled pairs.
///
/// `sampler(i)` must be deterministic in `i`. Samples `0..pairs` form the
/// base sweep and `0..2*pairs` the doubled one.
pub fn lipschitz_ratio_sweep<F, S>(
    space: &ModelSpace,
    field: F,
    sampler: S,
    pairs: usize,
) -> Result<LipschitzStats>
where
    F: Fn(&Point) -> Result<TangentVector>,
    S: Fn(u64) -> Result<(Point, Point)>,
{
    let edges: Vec<f64> = (0..=32).map(|i| 10f64.powf(-4.0 + 0.25 * i as f64)).collect();
    let mut counts = vec![0usize; edges.len() + 1];
    let mut skipped = 0;
    let mut max_base = 0.0_f64;
    let mut max_all = 0.0_f64;
    for i in 0..(2 * pairs) as u64 {
        let (p, q) = sampler(i)?;
        let d = space.distance(&p, &q)?;
        if d < 1e-10 {
            skipped += 1;
            continue;
        }
        let fp = field(&p)?;
        let fq = field(&q)?;
        let moved = space.parallel_transport(&q, &p, &fq)?;
        let diff = TangentVector::new(p, fp.components - moved.components);
        let diff = space.project_tangent(&p, diff.components);
        let ratio = space.norm(&diff) / d;
        if !ratio.is_finite() {
            return Err(Error::NoConvergence {
                what: "lipschitz sweep (non-finite ratio)",
                residual: ratio,
            });
        }
        if (i as usize) < pairs {
            max_base = max_base.max(ratio);
        }
        max_all = max_all.max(ratio);
        let bin = edges.iter().position(|e| ratio < *e).unwrap_or(edges.len());
        counts[bin] += 1;
    }
    let mut histogram = Vec::with_capacity(counts.len());
    for (i, c) in counts.iter().enumerate() {
        let lo = if i == 0 { 0.0 } else { edges[i - 1] };
        let hi = if i < edges.len() { edges[i] } else { f64::INFINITY };
        histogram.push(HistogramBin { lo, hi, count: *c });
    }
    let relative_change = if max_all > 0.0 {
        (max_all - max_base) / max_all
    } else {
        0.0
    };
    Ok(LipschitzStats {
        pairs,
        skipped,
        max_ratio_base: max_base,
        max_ratio: max_all,
        relative_change,
        stabilized: max_all.is_finite() && relative_change < LIPSCHITZ_STABILITY,
        histogram,
    })
}
