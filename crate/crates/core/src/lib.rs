//! Numerical laboratory for total Gauss-Kronecker curvature of convex
//! hypersurfaces in Cartan-Hadamard model spaces.

pub mod comparison;
pub mod convex_body;
pub mod error;
pub mod model_space;
pub mod optim;
pub mod quadrature;
pub mod sampling;
pub mod surface_calculus;
pub mod vector;

pub use comparison::{AdaptedFrame, ComparisonReport, InterpolantField, IntegrandSample};
pub use convex_body::{BodyKind, ConvexBody, LipschitzStats, ProjectionResult};
pub use error::{Error, Result};
pub use model_space::{
    unit_sphere_volume, CurvatureOperatorMatrix, FrameField, ModelSpace, Point, SpaceKind,
    TangentVector, WarpProfile,
};
pub use quadrature::AngularGrid;
pub use surface_calculus::{
    AnalyticSphere, RadialGraph, ScalarField, SurfaceOptions, SurfacePointData,
};
pub use vector::Vector;
