//! Ambient Cartan-Hadamard model spaces.
//!
//! Three kinds of ambient geometry are supported:
//!
//! * `Euclidean(n)`: flat `R^n`, points are plain coordinates.
//! * `ConstantNegative(n, k)`: hyperbolic space of curvature `k < 0` realised
//!   as the upper sheet `<x,x>_L = 1/k`, `x_0 > 0` of the hyperboloid in
//!   Minkowski space `R^{n,1}` with `<x,y>_L = -x_0 y_0 + sum x_i y_i`.
//! * `Warped(n, phi)`: the rotationally symmetric metric `dr^2 + phi(r)^2 g_S`
//!   with `phi(r) = sinh r + c (r - r0)_+^3`. Points use the Cartesian chart
//!   `x = r * omega`, in which the metric reads
//!   `g_x(u, v) = s(r) u.v + mu(r) (x.u)(x.v)` with `s = (phi/r)^2` and
//!   `mu = (1 - s)/r^2`. The chart is smooth through the origin.
//!
//! The curvature convention is `R(a, b, c, d) = <R(a, b) c, d>` normalised so
//! that `R(e_i, e_j, e_i, e_j)` is the sectional curvature of the plane
//! spanned by orthonormal `e_i, e_j`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::Vector;

/// Maximum ambient dimension for analytic operations.
pub const MAX_DIM: usize = 8;

/// Arc-length step of the warped-space geodesic integrator.
pub const GEODESIC_STEP: f64 = 1e-3;

const LOG_TOL: f64 = 1e-10;
const LOG_MAX_ITER: usize = 100;

/// Below this radius the warped metric coefficients are evaluated by series.
const SERIES_RADIUS: f64 = 0.5;
const SERIES_TERMS: usize = 14;

/// Warp profile `phi(r) = sinh r + c (r - r0)_+^3`.
///
/// Curvature is exactly `-1` on the ball `r <= r0` and varies continuously
/// outside it. `c >= 0` keeps `phi' >= 1` and `phi'' >= 0`, which is the
/// Cartan-Hadamard condition for this family.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WarpProfile {
    pub r0: f64,
    pub c: f64,
}

impl WarpProfile {
    pub fn new(r0: f64, c: f64) -> Result<Self> {
        if !(r0.is_finite() && c.is_finite()) {
            return Err(Error::InvalidSpace("warp parameters must be finite".into()));
        }
        if r0 < 0.1 {
            return Err(Error::InvalidSpace(format!(
                "warp radius r0 = {r0} must be at least 0.1"
            )));
        }
        if c < 0.0 {
            // phi'' = sinh r + 6c(r - r0) turns negative just outside r0.
            return Err(Error::InvalidSpace(format!(
                "warp excess c = {c} < 0 violates phi'' >= 0 (positive curvature)"
            )));
        }
        Ok(WarpProfile { r0, c })
    }

    /// Pure hyperbolic profile (no cubic excess).
    pub fn hyperbolic() -> Self {
        WarpProfile { r0: 1.0, c: 0.0 }
    }

    fn excess(&self, r: f64) -> f64 {
        (r - self.r0).max(0.0)
    }

    pub fn phi(&self, r: f64) -> f64 {
        let e = self.excess(r);
        r.sinh() + self.c * e * e * e
    }

    pub fn dphi(&self, r: f64) -> f64 {
        let e = self.excess(r);
        r.cosh() + 3.0 * self.c * e * e
    }

    pub fn ddphi(&self, r: f64) -> f64 {
        r.sinh() + 6.0 * self.c * self.excess(r)
    }

    /// Sectional curvature of planes containing the radial direction.
    pub fn radial_curvature(&self, r: f64) -> f64 {
        let r = r.abs();
        if r <= self.r0 {
            return -1.0;
        }
        -self.ddphi(r) / self.phi(r)
    }

    /// Sectional curvature of planes tangent to the geodesic spheres `r = const`.
    pub fn tangential_curvature(&self, r: f64) -> f64 {
        let r = r.abs();
        if r <= self.r0 {
            return -1.0;
        }
        let e = self.excess(r);
        let half = (0.5 * r).sinh();
        // 1 - phi' written without cancellation.
        let one_minus = -2.0 * half * half - 3.0 * self.c * e * e;
        let phi = self.phi(r);
        one_minus * (1.0 + self.dphi(r)) / (phi * phi)
    }

    /// Metric coefficients of the Cartesian chart at radius `r`.
    fn coeffs(&self, r: f64) -> ChartCoeffs {
        if r < SERIES_RADIUS.min(self.r0) {
            return series_coeffs(r);
        }
        let q = self.phi(r) / r;
        let s = q * q;
        let ds = 2.0 * q * (self.dphi(r) * r - self.phi(r)) / (r * r);
        let mu = (1.0 - s) / (r * r);
        let dmu_over_r = -ds / (r * r * r) - 2.0 * (1.0 - s) / (r * r * r * r);
        ChartCoeffs {
            s,
            ds,
            mu,
            dmu_over_r,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct ChartCoeffs {
    s: f64,
    ds: f64,
    mu: f64,
    dmu_over_r: f64,
}

/// Taylor coefficients of `(sinh r / r)^2 = sum b_m r^{2m}`.
fn sinhc_squared_coeffs() -> &'static [f64; SERIES_TERMS] {
    static COEFFS: OnceLock<[f64; SERIES_TERMS]> = OnceLock::new();
    COEFFS.get_or_init(|| {
        let mut a = [0.0; SERIES_TERMS];
        let mut fact = 1.0;
        for (m, am) in a.iter_mut().enumerate() {
            if m > 0 {
                fact *= (2 * m) as f64 * (2 * m + 1) as f64;
            }
            *am = 1.0 / fact;
        }
        let mut b = [0.0; SERIES_TERMS];
        for (m, bm) in b.iter_mut().enumerate() {
            *bm = (0..=m).map(|i| a[i] * a[m - i]).sum();
        }
        b
    })
}

fn series_coeffs(r: f64) -> ChartCoeffs {
    let b = sinhc_squared_coeffs();
    let r2 = r * r;
    let (mut s, mut ds, mut mu, mut dmu_over_r) = (0.0, 0.0, 0.0, 0.0);
    // pows[j] = r^{2j}
    let mut pows = [1.0; SERIES_TERMS];
    for j in 1..SERIES_TERMS {
        pows[j] = pows[j - 1] * r2;
    }
    for (m, &bm) in b.iter().enumerate() {
        s += bm * pows[m];
        if m >= 1 {
            ds += 2.0 * m as f64 * bm * pows[m - 1] * r;
            mu -= bm * pows[m - 1];
        }
        if m >= 2 {
            dmu_over_r -= (2 * m - 2) as f64 * bm * pows[m - 2];
        }
    }
    ChartCoeffs {
        s,
        ds,
        mu,
        dmu_over_r,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SpaceKind {
    Euclidean,
    ConstantNegative { k: f64 },
    Warped(WarpProfile),
}

/// A point in chart coordinates of its model space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub coords: Vector,
}

impl Point {
    pub fn new(coords: Vector) -> Self {
        Point { coords }
    }
}

/// A tangent vector, stored by its chart (or ambient) components together
/// with its base point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangentVector {
    pub base: Point,
    pub components: Vector,
}

impl TangentVector {
    pub fn new(base: Point, components: Vector) -> Self {
        TangentVector { base, components }
    }

    pub fn scaled(&self, t: f64) -> Self {
        TangentVector::new(self.base, self.components * t)
    }

    pub fn add(&self, other: &TangentVector) -> Self {
        TangentVector::new(self.base, self.components + other.components)
    }

    pub fn axpy(&self, t: f64, other: &TangentVector) -> Self {
        TangentVector::new(self.base, self.components.axpy(t, &other.components))
    }
}

/// An orthonormal frame `e_1, ..., e_n` at a point.
#[derive(Clone, Debug)]
pub struct FrameField {
    pub base: Point,
    pub vectors: Vec<TangentVector>,
}

/// Matrix of the curvature operator on 2-vectors in the basis
/// `e_i ^ e_j`, `i < j`, ordered lexicographically.
#[derive(Clone, Debug)]
pub struct CurvatureOperatorMatrix {
    pub entries: DMatrix<f64>,
    pub pairs: Vec<(usize, usize)>,
    pub frame: FrameField,
}

impl CurvatureOperatorMatrix {
    /// Largest absolute off-diagonal entry (the mixed curvature terms).
    pub fn max_mixed(&self) -> f64 {
        let m = self.entries.nrows();
        let mut best = 0.0_f64;
        for a in 0..m {
            for b in 0..m {
                if a != b {
                    best = best.max(self.entries[(a, b)].abs());
                }
            }
        }
        best
    }

    pub fn symmetry_residual(&self) -> f64 {
        (&self.entries - self.entries.transpose()).amax()
    }
}

/// The ambient Riemannian manifold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpace {
    dim: usize,
    kind: SpaceKind,
}

impl ModelSpace {
    pub fn euclidean(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(ModelSpace {
            dim,
            kind: SpaceKind::Euclidean,
        })
    }

    pub fn constant_negative(dim: usize, k: f64) -> Result<Self> {
        check_dim(dim)?;
        if !(k.is_finite() && k < 0.0) {
            return Err(Error::InvalidSpace(format!(
                "constant curvature k = {k} must be negative"
            )));
        }
        Ok(ModelSpace {
            dim,
            kind: SpaceKind::ConstantNegative { k },
        })
    }

    pub fn warped(dim: usize, profile: WarpProfile) -> Result<Self> {
        check_dim(dim)?;
        let profile = WarpProfile::new(profile.r0, profile.c)?;
        Ok(ModelSpace {
            dim,
            kind: SpaceKind::Warped(profile),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &SpaceKind {
        &self.kind
    }

    /// Number of stored coordinates per point.
    pub fn coord_len(&self) -> usize {
        match self.kind {
            SpaceKind::ConstantNegative { .. } => self.dim + 1,
            _ => self.dim,
        }
    }

    /// Curvature radius `a = 1/sqrt(-k)` of the hyperboloid.
    fn hyper_radius(&self) -> Option<f64> {
        match self.kind {
            SpaceKind::ConstantNegative { k } => Some(1.0 / (-k).sqrt()),
            _ => None,
        }
    }

    /// Sectional curvature if it is constant on the whole space.
    pub fn constant_curvature(&self) -> Option<f64> {
        match self.kind {
            SpaceKind::Euclidean => Some(0.0),
            SpaceKind::ConstantNegative { k } => Some(k),
            SpaceKind::Warped(_) => None,
        }
    }

    /// The distinguished origin: `0` in flat and warped charts, the apex
    /// `(a, 0, ..., 0)` of the hyperboloid.
    pub fn origin(&self) -> Point {
        let mut c = Vector::zeros(self.coord_len());
        if let Some(a) = self.hyper_radius() {
            c[0] = a;
        }
        Point::new(c)
    }

    /// Point at geodesic distance `|x|` from the origin in direction `x/|x|`,
    /// where `x` is given in the orthonormal frame of the origin.
    pub fn point_from_polar(&self, x: &[f64]) -> Result<Point> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        let o = self.origin();
        let v = self.tangent_from_frame(&o, &self.standard_frame(&o), x);
        self.exp_map(&o, &v)
    }

    /// Build and validate a point from raw chart coordinates.
    pub fn point(&self, coords: &[f64]) -> Result<Point> {
        if coords.len() != self.coord_len() {
            return Err(Error::DimensionMismatch {
                expected: self.coord_len(),
                got: coords.len(),
            });
        }
        let v = Vector::from_slice(coords);
        if !v.is_finite() {
            return Err(Error::InvalidPoint("non-finite coordinates".into()));
        }
        if let Some(a) = self.hyper_radius() {
            let q = lorentz(&v, &v);
            if v[0] <= 0.0 || (q + a * a).abs() > 1e-9 * (1.0 + v.norm_squared()) {
                return Err(Error::InvalidPoint(format!(
                    "<x,x>_L = {q} differs from 1/k = {}",
                    -a * a
                )));
            }
            return Ok(self.normalize_point(Point::new(v)));
        }
        Ok(Point::new(v))
    }

    pub fn tangent(&self, base: &Point, components: &[f64]) -> Result<TangentVector> {
        if components.len() != self.coord_len() {
            return Err(Error::DimensionMismatch {
                expected: self.coord_len(),
                got: components.len(),
            });
        }
        Ok(self.project_tangent(base, Vector::from_slice(components)))
    }

    /// Re-project a hyperboloid point onto the sheet; identity elsewhere.
    pub fn normalize_point(&self, p: Point) -> Point {
        match self.hyper_radius() {
            Some(a) => {
                let mut c = p.coords;
                let spatial: f64 = c.as_slice()[1..].iter().map(|x| x * x).sum();
                c[0] = (a * a + spatial).sqrt();
                Point::new(c)
            }
            None => p,
        }
    }

    /// Project ambient components onto `T_p M` (Lorentz-orthogonal on the
    /// hyperboloid; identity elsewhere).
    pub fn project_tangent(&self, base: &Point, w: Vector) -> TangentVector {
        match self.hyper_radius() {
            Some(a) => {
                let c = lorentz(&base.coords, &w) / (a * a);
                TangentVector::new(*base, w.axpy(c, &base.coords))
            }
            None => TangentVector::new(*base, w),
        }
    }

    pub fn inner(&self, u: &TangentVector, v: &TangentVector) -> f64 {
        self.inner_at(&u.base, &u.components, &v.components)
    }

    fn inner_at(&self, p: &Point, u: &Vector, v: &Vector) -> f64 {
        match &self.kind {
            SpaceKind::Euclidean => u.dot(v),
            SpaceKind::ConstantNegative { .. } => lorentz(u, v),
            SpaceKind::Warped(w) => {
                let x = &p.coords;
                let r = x.norm();
                let cf = w.coeffs(r);
                cf.s * u.dot(v) + cf.mu * x.dot(u) * x.dot(v)
            }
        }
    }

    pub fn norm(&self, v: &TangentVector) -> f64 {
        self.inner(v, v).max(0.0).sqrt()
    }

    fn same_point(&self, p: &Point, q: &Point) -> bool {
        let scale = 1.0 + p.coords.max_abs().max(q.coords.max_abs());
        (p.coords - q.coords).max_abs() <= 1e-9 * scale
    }

    fn check_base(&self, p: &Point, v: &TangentVector) -> Result<()> {
        if p.coords.len() != self.coord_len() {
            return Err(Error::DimensionMismatch {
                expected: self.coord_len(),
                got: p.coords.len(),
            });
        }
        if !self.same_point(p, &v.base) {
            return Err(Error::MismatchedBase);
        }
        Ok(())
    }

    fn check_point(&self, p: &Point) -> Result<()> {
        if p.coords.len() != self.coord_len() {
            return Err(Error::DimensionMismatch {
                expected: self.coord_len(),
                got: p.coords.len(),
            });
        }
        Ok(())
    }

    /// Exponential map: endpoint of the geodesic with initial velocity `v`.
    pub fn exp_map(&self, p: &Point, v: &TangentVector) -> Result<Point> {
        self.check_base(p, v)?;
        Ok(match &self.kind {
            SpaceKind::Euclidean => Point::new(p.coords + v.components),
            SpaceKind::ConstantNegative { .. } => self.hyper_exp(p, &v.components),
            SpaceKind::Warped(w) => {
                if let Some(q) = radial_exp(p, &v.components) {
                    q
                } else {
                    integrate_geodesic(w, p, &v.components, &[]).0
                }
            }
        })
    }

    fn hyper_exp(&self, p: &Point, v: &Vector) -> Point {
        let a = self.hyper_radius().unwrap();
        let len = lorentz(v, v).max(0.0).sqrt();
        let theta = len / a;
        let sinhc = if theta < 1e-8 {
            1.0 + theta * theta / 6.0
        } else {
            theta.sinh() / theta
        };
        let q = (p.coords * theta.cosh()).axpy(sinhc, v);
        self.normalize_point(Point::new(q))
    }

    /// Logarithm map: the initial velocity of the unique geodesic from `p`
    /// reaching `q` at time one.
    pub fn log_map(&self, p: &Point, q: &Point) -> Result<TangentVector> {
        self.check_point(p)?;
        self.check_point(q)?;
        match &self.kind {
            SpaceKind::Euclidean => Ok(TangentVector::new(*p, q.coords - p.coords)),
            SpaceKind::ConstantNegative { .. } => Ok(self.hyper_log(p, q)),
            SpaceKind::Warped(w) => warped_log(w, p, q),
        }
    }

    fn hyper_log(&self, p: &Point, q: &Point) -> TangentVector {
        let a = self.hyper_radius().unwrap();
        let d = self.hyper_distance(p, q);
        if d == 0.0 {
            return TangentVector::new(*p, Vector::zeros(p.coords.len()));
        }
        let u = self
            .project_tangent(p, q.coords.axpy(lorentz(&p.coords, &q.coords) / (a * a), &p.coords))
            .components;
        let un = lorentz(&u, &u).max(0.0).sqrt();
        if un == 0.0 {
            return TangentVector::new(*p, Vector::zeros(p.coords.len()));
        }
        TangentVector::new(*p, u * (d / un))
    }

    fn hyper_distance(&self, p: &Point, q: &Point) -> f64 {
        let a = self.hyper_radius().unwrap();
        let diff = q.coords - p.coords;
        // <q-p, q-p>_L = 4 a^2 sinh^2(d / 2a), well conditioned for close points.
        let chord = lorentz(&diff, &diff).max(0.0).sqrt();
        2.0 * a * (chord / (2.0 * a)).asinh()
    }

    /// Riemannian distance.
    pub fn distance(&self, p: &Point, q: &Point) -> Result<f64> {
        self.check_point(p)?;
        self.check_point(q)?;
        match &self.kind {
            SpaceKind::Euclidean => Ok((q.coords - p.coords).norm()),
            SpaceKind::ConstantNegative { .. } => Ok(self.hyper_distance(p, q)),
            SpaceKind::Warped(_) => {
                if p.coords.norm() == 0.0 {
                    return Ok(q.coords.norm());
                }
                if q.coords.norm() == 0.0 {
                    return Ok(p.coords.norm());
                }
                let v = self.log_map(p, q)?;
                Ok(self.norm(&v))
            }
        }
    }

    /// Parallel transport of `v` (based at `p`) to `q` along the geodesic.
    pub fn parallel_transport(
        &self,
        p: &Point,
        q: &Point,
        v: &TangentVector,
    ) -> Result<TangentVector> {
        self.check_base(p, v)?;
        self.check_point(q)?;
        match &self.kind {
            SpaceKind::Euclidean => Ok(TangentVector::new(*q, v.components)),
            SpaceKind::ConstantNegative { .. } => {
                let a = self.hyper_radius().unwrap();
                let denom = a * a - lorentz(&p.coords, &q.coords);
                let c = lorentz(&q.coords, &v.components) / denom;
                let w = v.components.axpy(c, &(p.coords + q.coords));
                Ok(self.project_tangent(q, w))
            }
            SpaceKind::Warped(_) => {
                let u = self.log_map(p, q)?;
                let (_, _, moved) = self.geodesic_transport(p, &u, &[*v])?;
                Ok(TangentVector::new(*q, moved[0].components))
            }
        }
    }

    /// Follow the geodesic `t -> exp_p(t v)` for `t in [0, 1]`, returning the
    /// endpoint, the velocity there, and the parallel transports of `ws`.
    pub fn geodesic_transport(
        &self,
        p: &Point,
        v: &TangentVector,
        ws: &[TangentVector],
    ) -> Result<(Point, TangentVector, Vec<TangentVector>)> {
        self.check_base(p, v)?;
        for w in ws {
            self.check_base(p, w)?;
        }
        match &self.kind {
            SpaceKind::Euclidean | SpaceKind::ConstantNegative { .. } => {
                let q = self.exp_map(p, v)?;
                let vel = self.parallel_transport(p, &q, v)?;
                let moved = ws
                    .iter()
                    .map(|w| self.parallel_transport(p, &q, w))
                    .collect::<Result<Vec<_>>>()?;
                Ok((q, vel, moved))
            }
            SpaceKind::Warped(prof) => {
                let comps: Vec<Vector> = ws.iter().map(|w| w.components).collect();
                let (q, vel, moved) = integrate_geodesic(prof, p, &v.components, &comps);
                Ok((
                    q,
                    TangentVector::new(q, vel),
                    moved.into_iter().map(|m| TangentVector::new(q, m)).collect(),
                ))
            }
        }
    }

    /// Parallel transport of `w` (based at `q = exp_p(v)`) back to `p` along
    /// the geodesic `t -> exp_p(t v)`.
    pub fn transport_back(
        &self,
        p: &Point,
        v: &TangentVector,
        q: &Point,
        w: &TangentVector,
    ) -> Result<TangentVector> {
        match &self.kind {
            SpaceKind::Warped(prof) => {
                self.check_base(p, v)?;
                self.check_base(q, w)?;
                let (_, vel, _) = integrate_geodesic(prof, p, &v.components, &[]);
                let (_, _, moved) = integrate_geodesic(prof, q, &(-vel), &[w.components]);
                Ok(TangentVector::new(*p, moved[0]))
            }
            _ => {
                let out = self.parallel_transport(q, p, w)?;
                Ok(self.project_tangent(p, out.components))
            }
        }
    }

    /// Orthonormal basis of `T_p M` obtained by Gram-Schmidt from the chart
    /// basis.
    pub fn standard_frame(&self, p: &Point) -> FrameField {
        let start: Vec<Vector> = match self.kind {
            SpaceKind::ConstantNegative { .. } => (1..=self.dim)
                .map(|i| Vector::basis(self.dim + 1, i))
                .collect(),
            _ => (0..self.dim).map(|i| Vector::basis(self.dim, i)).collect(),
        };
        let vectors = self.gram_schmidt(p, &start);
        FrameField { base: *p, vectors }
    }

    /// Gram-Schmidt in the metric at `p`. Dependent inputs are dropped.
    pub fn gram_schmidt(&self, p: &Point, input: &[Vector]) -> Vec<TangentVector> {
        let mut out: Vec<TangentVector> = Vec::with_capacity(input.len());
        for w in input {
            let mut t = self.project_tangent(p, *w);
            // Two passes keep the result orthonormal to ~1e-15.
            for _ in 0..2 {
                for e in &out {
                    let c = self.inner(&t, e);
                    t = t.axpy(-c, e);
                }
            }
            let n = self.norm(&t);
            let scale = self.norm(&self.project_tangent(p, *w)).max(1e-300);
            if n > 1e-10 * scale {
                out.push(t.scaled(1.0 / n));
            }
        }
        out
    }

    /// Complete orthonormal `first` vectors to a full orthonormal frame.
    pub fn complete_frame(&self, p: &Point, first: &[TangentVector]) -> Result<FrameField> {
        let mut input: Vec<Vector> = first.iter().map(|v| v.components).collect();
        input.extend(self.standard_frame(p).vectors.iter().map(|e| e.components));
        let vectors: Vec<TangentVector> = self
            .gram_schmidt(p, &input)
            .into_iter()
            .take(self.dim)
            .collect();
        self.frame(p, vectors)
    }

    /// Validate an orthonormal frame at `p`.
    pub fn frame(&self, p: &Point, vectors: Vec<TangentVector>) -> Result<FrameField> {
        if vectors.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: vectors.len(),
            });
        }
        for v in &vectors {
            self.check_base(p, v)?;
        }
        let f = FrameField { base: *p, vectors };
        let res = self.gram_residual(&f);
        if res > 1e-10 {
            return Err(Error::InvalidFrame(res));
        }
        Ok(f)
    }

    pub fn gram_residual(&self, frame: &FrameField) -> f64 {
        let mut worst = 0.0_f64;
        for (i, a) in frame.vectors.iter().enumerate() {
            for (j, b) in frame.vectors.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((self.inner(a, b) - target).abs());
            }
        }
        worst
    }

    /// Tangent vector with coordinates `x` in the given frame.
    pub fn tangent_from_frame(&self, p: &Point, frame: &FrameField, x: &[f64]) -> TangentVector {
        let mut acc = Vector::zeros(self.coord_len());
        for (xi, e) in x.iter().zip(&frame.vectors) {
            acc = acc.axpy(*xi, &e.components);
        }
        self.project_tangent(p, acc)
    }

    /// The curvature 4-tensor `R(a, b, c, d) = <R(a, b) c, d>`.
    pub fn riemann(
        &self,
        a: &TangentVector,
        b: &TangentVector,
        c: &TangentVector,
        d: &TangentVector,
    ) -> f64 {
        let g = |u: &TangentVector, v: &TangentVector| self.inner(u, v);
        let gauss = g(a, c) * g(b, d) - g(a, d) * g(b, c);
        match &self.kind {
            SpaceKind::Euclidean => 0.0,
            SpaceKind::ConstantNegative { k } => k * gauss,
            SpaceKind::Warped(w) => {
                let x = &a.base.coords;
                let r = x.norm();
                let kt = w.tangential_curvature(r);
                let kr = w.radial_curvature(r);
                if r == 0.0 || kr == kt {
                    return kt * gauss;
                }
                let xh = *x * (1.0 / r);
                // g(v, d/dr) = x_hat . v in this chart.
                let rho = |v: &TangentVector| xh.dot(&v.components);
                let kn = rho(a) * rho(c) * g(b, d) + rho(b) * rho(d) * g(a, c)
                    - rho(a) * rho(d) * g(b, c)
                    - rho(b) * rho(c) * g(a, d);
                kt * gauss + (kr - kt) * kn
            }
        }
    }

    /// `R_{ijkl}` in the given orthonormal frame (0-based indices).
    pub fn riemann_component(
        &self,
        frame: &FrameField,
        i: usize,
        j: usize,
        k: usize,
        l: usize,
    ) -> Result<f64> {
        let n = frame.vectors.len();
        for idx in [i, j, k, l] {
            if idx >= n {
                return Err(Error::IndexOutOfRange { index: idx, dim: n });
            }
        }
        let e = &frame.vectors;
        Ok(self.riemann(&e[i], &e[j], &e[k], &e[l]))
    }

    pub fn curvature_operator_matrix(&self, frame: &FrameField) -> Result<CurvatureOperatorMatrix> {
        let res = self.gram_residual(frame);
        if res > 1e-10 {
            return Err(Error::InvalidFrame(res));
        }
        let n = frame.vectors.len();
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .collect();
        let m = pairs.len();
        let e = &frame.vectors;
        let entries = DMatrix::from_fn(m, m, |a, b| {
            let (i, j) = pairs[a];
            let (k, l) = pairs[b];
            self.riemann(&e[i], &e[j], &e[k], &e[l])
        });
        Ok(CurvatureOperatorMatrix {
            entries,
            pairs,
            frame: frame.clone(),
        })
    }

    pub fn sectional_curvature(&self, u: &TangentVector, v: &TangentVector) -> Result<f64> {
        let uu = self.inner(u, u);
        let vv = self.inner(v, v);
        let uv = self.inner(u, v);
        let area2 = uu * vv - uv * uv;
        if !(area2 > 1e-20 * uu * vv) || uu <= 0.0 || vv <= 0.0 {
            return Err(Error::DegeneratePlane);
        }
        Ok(self.riemann(u, v, u, v) / area2)
    }

    /// Polar Jacobian `J(s)`: the metric about `base` reads `ds^2 + J(s)^2 g_S`.
    /// Warped spaces only admit polar coordinates about the origin.
    pub fn polar_jacobian(&self, base: &Point, s: f64) -> Result<f64> {
        match &self.kind {
            SpaceKind::Euclidean => Ok(s),
            SpaceKind::ConstantNegative { .. } => {
                let a = self.hyper_radius().unwrap();
                Ok(a * (s / a).sinh())
            }
            SpaceKind::Warped(w) => {
                if base.coords.norm() > 1e-14 {
                    return Err(Error::Unsupported(
                        "radial graphs in warped spaces must be based at the origin".into(),
                    ));
                }
                Ok(w.phi(s))
            }
        }
    }

    /// Volume of the geodesic ball of radius `r` about any point of a
    /// constant-curvature space, or about the origin of a warped space.
    pub fn ball_volume(&self, r: f64) -> f64 {
        let n = self.dim;
        let steps = 2000;
        let h = r / steps as f64;
        let origin = self.origin();
        // Simpson on the polar Jacobian.
        let f = |s: f64| self.polar_jacobian(&origin, s).unwrap().powi(n as i32 - 1);
        let mut acc = f(0.0) + f(r);
        for i in 1..steps {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(i as f64 * h);
        }
        unit_sphere_volume(n).unwrap() * acc * h / 3.0
    }

    /// Random point at distance at most `max_dist` from `center`, with a
    /// uniformly distributed direction and uniform radius.
    pub fn random_point<R: Rng>(&self, rng: &mut R, center: &Point, max_dist: f64) -> Result<Point> {
        let dir = self.random_unit(rng, center);
        let r: f64 = rng.gen::<f64>() * max_dist;
        self.exp_map(center, &dir.scaled(r))
    }

    /// Uniformly random unit tangent vector at `p`.
    pub fn random_unit<R: Rng>(&self, rng: &mut R, p: &Point) -> TangentVector {
        let frame = self.standard_frame(p);
        loop {
            let x: Vec<f64> = (0..self.dim).map(|_| rng.sample(StandardNormal)).collect();
            let n = x.iter().map(|a| a * a).sum::<f64>().sqrt();
            if n > 1e-6 {
                let x: Vec<f64> = x.iter().map(|a| a / n).collect();
                return self.tangent_from_frame(p, &frame, &x);
            }
        }
    }

    /// Unit vector at `p` pointing away from `from` along the connecting
    /// geodesic (the radial direction `d/ds` of polar coordinates about
    /// `from`).
    pub fn radial_unit(&self, from: &Point, p: &Point) -> Result<TangentVector> {
        if let SpaceKind::Warped(_) = self.kind {
            if from.coords.norm() == 0.0 {
                let r = p.coords.norm();
                if r == 0.0 {
                    return Err(Error::InvalidArgument("radial direction at the pole".into()));
                }
                return Ok(TangentVector::new(*p, p.coords * (1.0 / r)));
            }
        }
        let back = self.log_map(p, from)?;
        let n = self.norm(&back);
        if n == 0.0 {
            return Err(Error::InvalidArgument("radial direction at the pole".into()));
        }
        Ok(back.scaled(-1.0 / n))
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if !(2..=MAX_DIM).contains(&dim) {
        return Err(Error::InvalidSpace(format!(
            "dimension {dim} outside supported range 2..={MAX_DIM}"
        )));
    }
    Ok(())
}

/// Minkowski form `-x_0 y_0 + sum x_i y_i`.
pub fn lorentz(x: &Vector, y: &Vector) -> f64 {
    x.dot(y) - 2.0 * x[0] * y[0]
}

/// Volume `|S^{n-1}| = 2 pi^{n/2} / Gamma(n/2)` of the unit sphere in `R^n`.
pub fn unit_sphere_volume(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "unit sphere volume needs n >= 2, got {n}"
        )));
    }
    // Gamma(n/2) by its half-integer recursion.
    let half_gamma = if n % 2 == 0 {
        (1..n / 2).map(|i| i as f64).product::<f64>()
    } else {
        let mut g = PI.sqrt();
        let mut x = 0.5;
        while x < n as f64 / 2.0 - 0.25 {
            g *= x;
            x += 1.0;
        }
        g
    };
    Ok(2.0 * PI.powf(n as f64 / 2.0) / half_gamma)
}

// ---------------------------------------------------------------------------
// Warped-space geodesics
// ---------------------------------------------------------------------------

/// Closed-form exp along radial lines (including from the origin).
fn radial_exp(p: &Point, v: &Vector) -> Option<Point> {
    let x = &p.coords;
    let r = x.norm();
    if r == 0.0 {
        // g = identity at the origin; radial geodesics are straight chart lines.
        return Some(Point::new(*v));
    }
    let xh = *x * (1.0 / r);
    let along = xh.dot(v);
    let perp = v.axpy(-along, &xh).norm();
    if perp <= 1e-15 * v.norm().max(1e-300) && r + along >= 0.0 {
        return Some(Point::new(xh * (r + along)));
    }
    None
}

/// `g^{-1}` applied to a covector in the Cartesian warped chart.
fn warped_inverse(x: &Vector, r: f64, cf: &ChartCoeffs, w: &Vector) -> Vector {
    if r == 0.0 {
        return *w;
    }
    let xh = *x * (1.0 / r);
    let a = xh.dot(w);
    let perp = w.axpy(-a, &xh);
    (xh * a).axpy(1.0 / cf.s, &perp)
}

/// Lowered Christoffel contraction `Gamma_l(v, w)`.
fn christoffel_lowered(x: &Vector, r: f64, cf: &ChartCoeffs, v: &Vector, w: &Vector) -> Vector {
    let vw = v.dot(w);
    let xv = x.dot(v);
    let xw = x.dot(w);
    let mut out = *x * (cf.mu * vw + 0.5 * cf.dmu_over_r * xv * xw);
    if r > 0.0 {
        let xh = *x * (1.0 / r);
        let half = 0.5 * cf.ds;
        out = out
            .axpy(half * xh.dot(v), w)
            .axpy(half * xh.dot(w), v)
            .axpy(-half * vw, &xh);
    }
    out
}

fn geodesic_rhs(prof: &WarpProfile, x: &Vector, v: &Vector, ws: &[Vector]) -> (Vector, Vec<Vector>) {
    let r = x.norm();
    let cf = prof.coeffs(r);
    let acc = -warped_inverse(x, r, &cf, &christoffel_lowered(x, r, &cf, v, v));
    let dws = ws
        .iter()
        .map(|w| -warped_inverse(x, r, &cf, &christoffel_lowered(x, r, &cf, v, w)))
        .collect();
    (acc, dws)
}

/// RK4 integration of the geodesic and transport equations over `t in [0,1]`.
fn integrate_geodesic(
    prof: &WarpProfile,
    p: &Point,
    v: &Vector,
    ws: &[Vector],
) -> (Point, Vector, Vec<Vector>) {
    let x0 = p.coords;
    let r = x0.norm();
    let cf = prof.coeffs(r);
    let speed = (cf.s * v.dot(v) + cf.mu * x0.dot(v).powi(2)).max(0.0).sqrt();
    let steps = ((speed / GEODESIC_STEP).ceil() as usize).max(1);
    let h = 1.0 / steps as f64;
    let mut x = x0;
    let mut vel = *v;
    let mut w: Vec<Vector> = ws.to_vec();
    for _ in 0..steps {
        let (a1, b1) = geodesic_rhs(prof, &x, &vel, &w);
        let x2 = x.axpy(0.5 * h, &vel);
        let v2 = vel.axpy(0.5 * h, &a1);
        let w2: Vec<Vector> = w.iter().zip(&b1).map(|(wi, bi)| wi.axpy(0.5 * h, bi)).collect();
        let (a2, b2) = geodesic_rhs(prof, &x2, &v2, &w2);
        let x3 = x.axpy(0.5 * h, &v2);
        let v3 = vel.axpy(0.5 * h, &a2);
        let w3: Vec<Vector> = w.iter().zip(&b2).map(|(wi, bi)| wi.axpy(0.5 * h, bi)).collect();
        let (a3, b3) = geodesic_rhs(prof, &x3, &v3, &w3);
        let x4 = x.axpy(h, &v3);
        let v4 = vel.axpy(h, &a3);
        let w4: Vec<Vector> = w.iter().zip(&b3).map(|(wi, bi)| wi.axpy(h, bi)).collect();
        let (a4, b4) = geodesic_rhs(prof, &x4, &v4, &w4);
        let h6 = h / 6.0;
        x = x
            .axpy(h6, &vel)
            .axpy(2.0 * h6, &v2)
            .axpy(2.0 * h6, &v3)
            .axpy(h6, &v4);
        vel = vel
            .axpy(h6, &a1)
            .axpy(2.0 * h6, &a2)
            .axpy(2.0 * h6, &a3)
            .axpy(h6, &a4);
        for (i, wi) in w.iter_mut().enumerate() {
            *wi = wi
                .axpy(h6, &b1[i])
                .axpy(2.0 * h6, &b2[i])
                .axpy(2.0 * h6, &b3[i])
                .axpy(h6, &b4[i]);
        }
    }
    (Point::new(x), vel, w)
}

/// Chart point of the warped space corresponding to a hyperboloid-style
/// polar description; used to seed shooting with the `c = 0` solution.
fn hyperbolic_log_guess(p: &Point, q: &Point) -> Vector {
    let lift = |x: &Vector| -> Vector {
        let r = x.norm();
        let mut out = Vector::zeros(x.len() + 1);
        out[0] = r.cosh();
        if r > 0.0 {
            let f = r.sinh() / r;
            for i in 0..x.len() {
                out[i + 1] = x[i] * f;
            }
        }
        out
    };
    let hp = lift(&p.coords);
    let hq = lift(&q.coords);
    let diff = hq - hp;
    let chord = lorentz(&diff, &diff).max(0.0).sqrt();
    let d = 2.0 * (0.5 * chord).asinh();
    let u = hq.axpy(lorentz(&hp, &hq), &hp);
    let un = lorentz(&u, &u).max(0.0).sqrt();
    if un == 0.0 {
        return Vector::zeros(p.coords.len());
    }
    let u = u * (d / un);
    // Push the hyperboloid tangent vector through the chart differential:
    // x = r * omega with (x0, xs) = (cosh r, sinh r * omega).
    let x = &p.coords;
    let r = x.norm();
    let n = x.len();
    let spatial = Vector::from_slice(&u.as_slice()[1..]);
    if r < 1e-12 {
        return spatial;
    }
    let xh = *x * (1.0 / r);
    // dr = u_0 / sinh r; tangential part scales by r / sinh r.
    let dr = u[0] / r.sinh();
    let tang = spatial.axpy(-xh.dot(&spatial), &xh) * (r / r.sinh());
    let mut out = tang.axpy(dr, &xh);
    if out.len() != n {
        out = Vector::zeros(n);
    }
    out
}

fn warped_log(prof: &WarpProfile, p: &Point, q: &Point) -> Result<TangentVector> {
    let x = &p.coords;
    let y = &q.coords;
    let rp = x.norm();
    let rq = y.norm();
    if (*x - *y).norm() == 0.0 {
        return Ok(TangentVector::new(*p, Vector::zeros(x.len())));
    }
    if rp == 0.0 {
        return Ok(TangentVector::new(*p, *y));
    }
    if rq == 0.0 {
        return Ok(TangentVector::new(*p, -*x));
    }
    let xh = *x * (1.0 / rp);
    let yh = *y * (1.0 / rq);
    if (xh - yh).norm() <= 1e-15 {
        return Ok(TangentVector::new(*p, xh * (rq - rp)));
    }
    if (xh + yh).norm() <= 1e-15 {
        return Ok(TangentVector::new(*p, xh * (-(rp + rq))));
    }

    // Damped Newton on the endpoint residual, seeded by the hyperbolic solution.
    let n = x.len();
    let mut v = hyperbolic_log_guess(p, q);
    let endpoint = |v: &Vector| integrate_geodesic(prof, p, v, &[]).0.coords;
    let mut res = endpoint(&v) - *y;
    let mut rnorm = res.norm();
    for _ in 0..LOG_MAX_ITER {
        if rnorm <= LOG_TOL {
            return Ok(TangentVector::new(*p, v));
        }
        let step = 1e-7 * (1.0 + v.norm());
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let mut vj = v;
            vj[j] += step;
            let col = (endpoint(&vj) - *y - res) * (1.0 / step);
            for i in 0..n {
                jac[(i, j)] = col[i];
            }
        }
        let rhs = nalgebra::DVector::from_column_slice(res.as_slice());
        let delta = match jac.lu().solve(&rhs) {
            Some(d) => d,
            None => {
                return Err(Error::NoConvergence {
                    what: "warped log map (singular Jacobian)",
                    residual: rnorm,
                })
            }
        };
        let delta = Vector::from_slice(delta.as_slice());
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial = v.axpy(-t, &delta);
            let tres = endpoint(&trial) - *y;
            let tn = tres.norm();
            if tn < rnorm {
                v = trial;
                res = tres;
                rnorm = tn;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if rnorm <= LOG_TOL {
        Ok(TangentVector::new(*p, v))
    } else {
        Err(Error::NoConvergence {
            what: "warped log map",
            residual: rnorm,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn hyp(n: usize) -> ModelSpace {
        ModelSpace::constant_negative(n, -1.0).unwrap()
    }

    #[test]
    fn euclidean_exp_example() {
        let e = ModelSpace::euclidean(3).unwrap();
        let p = e.point(&[0.0, 0.0, 0.0]).unwrap();
        let v = e.tangent(&p, &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(e.exp_map(&p, &v).unwrap().coords.as_slice(), &[1.0, 0.0, 0.0]);
    }

    #[test]
    fn hyperboloid_exp_log_examples() {
        let h = hyp(2);
        let p = h.point(&[1.0, 0.0, 0.0]).unwrap();
        let v = h.tangent(&p, &[0.0, 1.0, 0.0]).unwrap();
        let q = h.exp_map(&p, &v).unwrap();
        assert!((q.coords[0] - 1f64.cosh()).abs() < 1e-14);
        assert!((q.coords[1] - 1f64.sinh()).abs() < 1e-14);
        assert!(q.coords[2].abs() < 1e-15);
        let back = h.log_map(&p, &q).unwrap();
        assert!((back.components - v.components).norm() < 1e-13);
        assert!(h.log_map(&p, &p).unwrap().components.norm() == 0.0);
        assert_eq!(h.distance(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn exp_rejects_foreign_tangent() {
        let h = hyp(2);
        let p = h.origin();
        let q = h.point_from_polar(&[0.5, 0.0]).unwrap();
        let v = h.tangent(&q, &[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(h.exp_map(&p, &v), Err(Error::MismatchedBase));
    }

    #[test]
    fn warped_radial_exp() {
        let w = ModelSpace::warped(3, WarpProfile::new(1.0, 0.05).unwrap()).unwrap();
        let o = w.origin();
        let v = w.tangent(&o, &[0.0, 1.7, 0.0]).unwrap();
        let q = w.exp_map(&o, &v).unwrap();
        assert!((q.coords.norm() - 1.7).abs() < 1e-15);
        assert!((w.distance(&o, &q).unwrap() - 1.7).abs() < 1e-15);
    }

    #[test]
    fn constant_curvature_tensor() {
        let h = ModelSpace::constant_negative(4, -2.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = h.random_point(&mut rng, &h.origin(), 2.0).unwrap();
        let f = h.standard_frame(&p);
        assert!((h.riemann_component(&f, 0, 1, 0, 1).unwrap() + 2.5).abs() < 1e-12);
        assert!(h.riemann_component(&f, 0, 1, 0, 2).unwrap().abs() < 1e-12);
        assert!(h.riemann_component(&f, 0, 4, 0, 1).is_err());
        let m = h.curvature_operator_matrix(&f).unwrap();
        assert_eq!(m.entries.nrows(), 6);
        for a in 0..6 {
            for b in 0..6 {
                let want = if a == b { -2.5 } else { 0.0 };
                assert!((m.entries[(a, b)] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sinh_warp_is_hyperbolic() {
        let w = ModelSpace::warped(3, WarpProfile::new(1.0, 0.0).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let p = w.random_point(&mut rng, &w.origin(), 3.0).unwrap();
            let u = w.random_unit(&mut rng, &p);
            let v = w.random_unit(&mut rng, &p);
            assert!((w.sectional_curvature(&u, &v).unwrap() + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn warped_polar_frame_curvatures() {
        let prof = WarpProfile::new(1.0, 0.05).unwrap();
        let w = ModelSpace::warped(3, prof).unwrap();
        let p = w.point(&[0.0, 0.0, 1.5]).unwrap();
        let frame = w.complete_frame(&p, &[TangentVector::new(p, Vector::basis(3, 2))]).unwrap();
        let rad = w.riemann_component(&frame, 0, 1, 0, 1).unwrap();
        let tan = w.riemann_component(&frame, 1, 2, 1, 2).unwrap();
        assert!((rad - prof.radial_curvature(1.5)).abs() < 1e-12);
        assert!((tan - prof.tangential_curvature(1.5)).abs() < 1e-12);
        assert!(rad < -1.0 && tan < -1.0);
    }

    #[test]
    fn warp_rejects_positive_curvature() {
        assert!(WarpProfile::new(1.0, -0.1).is_err());
        assert!(ModelSpace::constant_negative(3, 0.5).is_err());
        assert!(ModelSpace::euclidean(1).is_err());
        assert!(ModelSpace::euclidean(9).is_err());
    }

    #[test]
    fn degenerate_plane() {
        let h = hyp(3);
        let p = h.origin();
        let u = h.tangent(&p, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(h.sectional_curvature(&u, &u.scaled(2.0)), Err(Error::DegeneratePlane));
    }

    #[test]
    fn sphere_volumes() {
        assert!((unit_sphere_volume(2).unwrap() - 2.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_volume(3).unwrap() - 4.0 * PI).abs() < 1e-14);
        assert!(unit_sphere_volume(1).is_err());
    }

    #[test]
    fn series_matches_closed_form_at_switch() {
        let prof = WarpProfile::new(1.0, 0.0).unwrap();
        let r = SERIES_RADIUS;
        let a = series_coeffs(r * (1.0 - 1e-12));
        let q = r.sinh() / r;
        let s = q * q;
        let ds = 2.0 * q * (r.cosh() * r - r.sinh()) / (r * r);
        let mu = (1.0 - s) / (r * r);
        let dmu = -ds / r.powi(3) - 2.0 * (1.0 - s) / r.powi(4);
        assert!((a.s - s).abs() < 1e-12);
        assert!((a.ds - ds).abs() < 1e-11);
        assert!((a.mu - mu).abs() < 1e-11);
        assert!((a.dmu_over_r - dmu).abs() < 1e-9);
        let b = prof.coeffs(r * (1.0 + 1e-12));
        assert!((b.s - s).abs() < 1e-12);
        let z = series_coeffs(0.0);
        assert_eq!(z.s, 1.0);
        assert!((z.mu + 1.0 / 3.0).abs() < 1e-15);
        assert!((z.dmu_over_r + 4.0 / 45.0).abs() < 1e-15);
    }
}
