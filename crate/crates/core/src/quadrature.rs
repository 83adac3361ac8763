//! Quadrature rules: Gauss-Legendre on intervals and direction grids on the
//! unit sphere of a tangent space.

use std::f64::consts::PI;
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;

use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights mapped to `[a, b]`.
pub fn gauss_legendre(order: usize, a: f64, b: f64) -> Result<Vec<(f64, f64)>> {
    let deg = NonZeroUsize::new(order)
        .ok_or_else(|| Error::InvalidArgument("quadrature order must be positive".into()))?;
    let rule = GaussLegendre::new(deg);
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let mut out: Vec<(f64, f64)> = rule
        .as_node_weight_pairs()
        .iter()
        .map(|(x, w)| (mid + half * x, half * w))
        .collect();
    out.sort_by(|x, y| x.0.total_cmp(&y.0));
    Ok(out)
}

/// Unit directions in the orthonormal frame of a base point, with weights
/// integrating functions on the unit sphere `S^{n-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct AngularGrid {
    dim: usize,
    /// `(polar, azimuthal)` counts; `polar` is 1 for circles.
    shape: (usize, usize),
    directions: Vec<Vec<f64>>,
    weights: Vec<f64>,
    /// Cell of each structured node; empty for unstructured grids.
    cells: Vec<Cell>,
}

/// A patch `[z0, z1] x [t0, t1]` of the unit sphere in (cos polar, azimuth)
/// coordinates, whose area is exactly `(z1 - z0)(t1 - t0)`. Circle cells
/// ignore `z`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cell {
    pub z0: f64,
    pub z1: f64,
    pub t0: f64,
    pub t1: f64,
}

impl Cell {
    pub fn measure(&self, dim: usize) -> f64 {
        if dim == 2 {
            self.t1 - self.t0
        } else {
            (self.z1 - self.z0) * (self.t1 - self.t0)
        }
    }

    /// Unit direction at the cell midpoint.
    pub fn midpoint_direction(&self, dim: usize) -> Vec<f64> {
        let t = 0.5 * (self.t0 + self.t1);
        if dim == 2 {
            vec![t.cos(), t.sin()]
        } else {
            let z = 0.5 * (self.z0 + self.z1);
            let rho = (1.0 - z * z).max(0.0).sqrt();
            vec![rho * t.cos(), rho * t.sin(), z]
        }
    }

    /// Halves along each coordinate (2 children on the circle, 4 on the
    /// sphere).
    pub fn split(&self, dim: usize) -> Vec<Cell> {
        let tm = 0.5 * (self.t0 + self.t1);
        if dim == 2 {
            return vec![
                Cell { t1: tm, ..*self },
                Cell { t0: tm, ..*self },
            ];
        }
        let zm = 0.5 * (self.z0 + self.z1);
        vec![
            Cell { z0: self.z0, z1: zm, t0: self.t0, t1: tm },
            Cell { z0: self.z0, z1: zm, t0: tm, t1: self.t1 },
            Cell { z0: zm, z1: self.z1, t0: self.t0, t1: tm },
            Cell { z0: zm, z1: self.z1, t0: tm, t1: self.t1 },
        ]
    }
}

impl AngularGrid {
    /// Uniform angles on the circle (trapezoidal rule).
    pub fn circle(n_theta: usize) -> Result<Self> {
        if n_theta < 3 {
            return Err(Error::InvalidArgument(format!(
                "circle grid needs at least 3 angles, got {n_theta}"
            )));
        }
        let h = 2.0 * PI / n_theta as f64;
        let directions = (0..n_theta)
            .map(|i| {
                let t = (i as f64 + 0.5) * h;
                vec![t.cos(), t.sin()]
            })
            .collect();
        let cells = (0..n_theta)
            .map(|i| Cell {
                z0: 0.0,
                z1: 0.0,
                t0: i as f64 * h,
                t1: (i + 1) as f64 * h,
            })
            .collect();
        Ok(AngularGrid {
            dim: 2,
            shape: (1, n_theta),
            directions,
            weights: vec![h; n_theta],
            cells,
        })
    }

    /// Gauss-Legendre in `cos(polar)` times uniform azimuth on `S^2`.
    pub fn sphere(n_phi: usize, n_theta: usize) -> Result<Self> {
        if n_phi < 2 || n_theta < 3 {
            return Err(Error::InvalidArgument(format!(
                "sphere grid {n_phi}x{n_theta} is too coarse"
            )));
        }
        let gl = gauss_legendre(n_phi, -1.0, 1.0)?;
        let h = 2.0 * PI / n_theta as f64;
        let mut directions = Vec::with_capacity(n_phi * n_theta);
        let mut weights = Vec::with_capacity(n_phi * n_theta);
        let mut cells = Vec::with_capacity(n_phi * n_theta);
        // Cumulative weights separate consecutive Gauss nodes, so they give
        // each node a cell of exactly its weight.
        let mut z0 = -1.0;
        for (z, wz) in &gl {
            let rho = (1.0 - z * z).max(0.0).sqrt();
            let z1 = (z0 + wz).min(1.0);
            for j in 0..n_theta {
                // Half-step offset keeps azimuths off the frame axes.
                let t = (j as f64 + 0.5) * h;
                directions.push(vec![rho * t.cos(), rho * t.sin(), *z]);
                weights.push(wz * h);
                cells.push(Cell {
                    z0,
                    z1,
                    t0: j as f64 * h,
                    t1: (j + 1) as f64 * h,
                });
            }
            z0 = z1;
        }
        Ok(AngularGrid {
            dim: 3,
            shape: (n_phi, n_theta),
            directions,
            weights,
            cells,
        })
    }

    /// Equal-area cells: uniform in `cos(polar)` and azimuth, with each node
    /// at its cell midpoint. Each node integrates its own cell to second
    /// order, so cells can be refined independently.
    pub fn sphere_midpoint(n_phi: usize, n_theta: usize) -> Result<Self> {
        if n_phi < 2 || n_theta < 3 {
            return Err(Error::InvalidArgument(format!(
                "sphere grid {n_phi}x{n_theta} is too coarse"
            )));
        }
        let dz = 2.0 / n_phi as f64;
        let h = 2.0 * PI / n_theta as f64;
        let cells: Vec<Cell> = (0..n_phi)
            .flat_map(|i| {
                (0..n_theta).map(move |j| Cell {
                    z0: -1.0 + i as f64 * dz,
                    z1: -1.0 + (i + 1) as f64 * dz,
                    t0: j as f64 * h,
                    t1: (j + 1) as f64 * h,
                })
            })
            .collect();
        Ok(AngularGrid {
            dim: 3,
            shape: (n_phi, n_theta),
            directions: cells.iter().map(|c| c.midpoint_direction(3)).collect(),
            weights: cells.iter().map(|c| c.measure(3)).collect(),
            cells,
        })
    }

    /// Midpoint-cell grid of the same shape (circles already are).
    pub fn to_midpoint(&self) -> Result<Self> {
        match self.dim {
            2 => Self::circle(self.shape.1),
            _ => Self::sphere_midpoint(self.shape.0, self.shape.1),
        }
    }

    /// The default grid for meshes in dimension `dim`: 512 angles for curves,
    /// 64x128 for surfaces.
    pub fn default_for(dim: usize) -> Result<Self> {
        match dim {
            2 => Self::circle(512),
            3 => Self::sphere(64, 128),
            _ => Err(Error::Unsupported(format!(
                "mesh operations are available for n in {{2, 3}}, not {dim}"
            ))),
        }
    }

    /// Grid with each resolution multiplied by `factor`.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        match self.dim {
            2 => Self::circle(self.shape.1 * factor),
            _ => Self::sphere(self.shape.0 * factor, self.shape.1 * factor),
        }
    }

    /// Unstructured grid from explicit directions and weights.
    pub fn from_parts(dim: usize, directions: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if directions.len() != weights.len() || directions.iter().any(|d| d.len() != dim) {
            return Err(Error::InvalidArgument("inconsistent grid parts".into()));
        }
        Ok(AngularGrid {
            dim,
            shape: (0, directions.len()),
            directions,
            weights,
            cells: Vec::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_structured(&self) -> bool {
        !self.cells.is_empty()
    }

    pub fn cell(&self, i: usize) -> Option<&Cell> {
        self.cells.get(i)
    }

    /// Indices of the structured neighbours of node `i` (azimuth periodic).
    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        if !self.is_structured() {
            return Vec::new();
        }
        let (np, nt) = self.shape;
        let (row, col) = (i / nt, i % nt);
        let mut out = vec![row * nt + (col + 1) % nt, row * nt + (col + nt - 1) % nt];
        if row > 0 {
            out.push(i - nt);
        }
        if row + 1 < np {
            out.push(i + nt);
        }
        out
    }

    pub fn shape(&self) -> (usize, usize) {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn direction(&self, i: usize) -> &[f64] {
        &self.directions[i]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Human-readable size, e.g. `64x128`.
    pub fn label(&self) -> String {
        if !self.is_structured() {
            format!("{} nodes", self.len())
        } else if self.dim == 2 {
            format!("{}", self.shape.1)
        } else {
            format!("{}x{}", self.shape.0, self.shape.1)
        }
    }
}
