//! Degeneracy analysis for point clouds.
//!
//! The crate is split into five layers:
//!
//! - [`geometry`]: residuals and tolerance predicates for collinear, coplanar
//!   and nearly spherical subsets, plus point-to-manifold distances.
//! - [`rng`] and [`samplers`]: seeded synthetic clouds (uniform, plane, sphere,
//!   line, scene) and the quantize/noise pipeline.
//! - [`analytics`]: closed-form probabilities and expected degenerate-subset
//!   counts for random and structured data.
//! - [`montecarlo`]: exhaustive and sampled counting of degenerate subsets,
//!   and analytic-vs-empirical comparison.

pub mod analytics;
pub mod error;
pub mod geometry;
pub mod montecarlo;
pub mod rng;
pub mod samplers;

pub use error::{Error, Result};
pub use geometry::{Point, PointCloud, ToleranceSpec};
pub use rng::SeededRng;
