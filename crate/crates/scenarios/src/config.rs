//! JSON scenario configuration.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use chlab_core::{AngularGrid, ConvexBody, ModelSpace, SurfaceOptions, WarpProfile};
use serde::{Deserialize, Serialize};

use crate::catalog;
use crate::error::{invalid, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub scenario: String,
    pub space: SpaceSpec,
    #[serde(default)]
    pub bodies: Vec<BodySpec>,
    pub numerics: Numerics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceSpec {
    Euclidean { dim: usize },
    ConstantNegative { dim: usize, k: f64 },
    Warped { dim: usize, r0: f64, c: f64 },
}

impl SpaceSpec {
    pub fn build(&self) -> Result<ModelSpace> {
        let space = match *self {
            SpaceSpec::Euclidean { dim } => ModelSpace::euclidean(dim),
            SpaceSpec::ConstantNegative { dim, k } => ModelSpace::constant_negative(dim, k),
            SpaceSpec::Warped { dim, r0, c } => WarpProfile::new(r0, c).and_then(|w| ModelSpace::warped(dim, w)),
        };
        space.map_err(|e| invalid(format!("space: {e}")))
    }

    pub fn dim(&self) -> usize {
        match *self {
            SpaceSpec::Euclidean { dim } | SpaceSpec::ConstantNegative { dim, .. } | SpaceSpec::Warped { dim, .. } => dim,
        }
    }
}

/// Points are given in the chart coordinates of `ModelSpace::point_from_polar`
/// (geodesic polar coordinates about the origin, written as a vector).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BodySpec {
    Ball { center: Vec<f64>, radius: f64 },
    Hull { vertices: Vec<Vec<f64>> },
    /// Hull of `vertices` points drawn uniformly in geodesic radius within
    /// `radius` of the origin.
    RandomHull { vertices: usize, radius: f64 },
}

impl BodySpec {
    /// Builds a fixed body; random hulls need a generator and go through
    /// the scenario samplers instead.
    pub fn build_fixed(&self, space: &ModelSpace) -> Result<Option<ConvexBody>> {
        let point = |c: &[f64]| space.point_from_polar(c).map_err(|e| invalid(format!("body point: {e}")));
        Ok(match self {
            BodySpec::Ball { center, radius } => Some(
                ConvexBody::ball(space, point(center)?, *radius).map_err(|e| invalid(format!("ball: {e}")))?,
            ),
            BodySpec::Hull { vertices } => {
                let vs = vertices.iter().map(|v| point(v)).collect::<Result<Vec<_>>>()?;
                Some(ConvexBody::hull(space, vs).map_err(|e| invalid(format!("hull: {e}")))?)
            }
            BodySpec::RandomHull { .. } => None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    pub seed: u64,
    /// `[n_polar, n_azimuth]` for surfaces, `[n_angles]` for curves.
    pub grid: Vec<usize>,
    /// Finite-difference step relative to the body diameter.
    pub fd_step: f64,
    /// Gauss-Legendre order across levels of the interpolant.
    #[serde(default = "default_order")]
    pub level_order: usize,
    /// Grid doublings for convergence checks.
    #[serde(default)]
    pub refinements: usize,
    /// Sample or pair count for sweeps.
    #[serde(default)]
    pub samples: usize,
    pub tolerances: BTreeMap<String, f64>,
    /// Interpolant weights as multiples of `epsilon`.
    #[serde(default)]
    pub lambdas: Vec<f64>,
    /// Defaults to `0.05 * diam(Omega)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Distances for parallel surfaces or frame sampling.
    #[serde(default)]
    pub t_grid: Vec<f64>,
    /// Level `c` of the outer hypersurface `{u = c}`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    /// Base point of radial graphs, in chart coordinates.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<Vec<f64>>,
    /// Worker threads; `CHLAB_WORKERS` overrides.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

fn default_order() -> usize {
    16
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(invalid(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let entry = catalog::find(&self.scenario)
            .ok_or_else(|| invalid(format!("unknown scenario '{}'", self.scenario)))?;
        let space = self.space.build()?;
        let n = &self.numerics;
        for (name, value) in &n.tolerances {
            if !entry.tolerances.contains(&name.as_str()) {
                return Err(invalid(format!(
                    "unknown tolerance '{name}' for {} (expected one of {:?})",
                    self.scenario, entry.tolerances
                )));
            }
            if !(value.is_finite() && *value > 0.0) {
                return Err(invalid(format!("tolerance '{name}' must be positive, got {value}")));
            }
        }
        for name in entry.tolerances {
            if !n.tolerances.contains_key(*name) {
                return Err(invalid(format!("missing tolerance '{name}'")));
            }
        }
        if !(n.fd_step.is_finite() && n.fd_step > 0.0) {
            return Err(invalid("fd_step must be positive"));
        }
        if n.level_order == 0 {
            return Err(invalid("level_order must be at least 1"));
        }
        if let Some(e) = n.epsilon {
            if !(e.is_finite() && e > 0.0) {
                return Err(invalid("epsilon must be positive"));
            }
        }
        if n.lambdas.iter().chain(&n.t_grid).any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(invalid("lambdas and t_grid entries must be positive"));
        }
        if let Some(c) = n.level {
            if !(c.is_finite() && c > 0.0) {
                return Err(invalid("level must be positive"));
            }
        }
        if let Some(b) = &n.base {
            space.point_from_polar(b).map_err(|e| invalid(format!("base: {e}")))?;
        }
        if n.workers == Some(0) {
            return Err(invalid("workers must be at least 1"));
        }
        if !n.grid.is_empty() {
            self.grid()?;
        }
        for b in &self.bodies {
            if let BodySpec::RandomHull { vertices, radius } = b {
                if *vertices < space.dim() + 1 || !(radius.is_finite() && *radius > 0.0) {
                    return Err(invalid("random hulls need at least n + 1 vertices and a positive radius"));
                }
            }
            b.build_fixed(&space)?;
        }
        Ok(())
    }

    pub fn space(&self) -> Result<ModelSpace> {
        self.space.build()
    }

    pub fn grid(&self) -> Result<Arc<AngularGrid>> {
        let g = &self.numerics.grid;
        let grid = match (self.space.dim(), g.as_slice()) {
            (2, [n]) => AngularGrid::circle(*n),
            (3, [a, b]) => AngularGrid::sphere(*a, *b),
            (d, _) => return Err(invalid(format!("grid {g:?} does not fit dimension {d}"))),
        };
        grid.map(Arc::new).map_err(|e| invalid(format!("grid: {e}")))
    }

    pub fn tol(&self, name: &str) -> f64 {
        self.numerics.tolerances[name]
    }

    pub fn surface_options(&self, diameter: f64) -> SurfaceOptions {
        let mut opts = SurfaceOptions::for_diameter(diameter);
        opts.fd_step = self.numerics.fd_step * diameter;
        opts
    }
}
