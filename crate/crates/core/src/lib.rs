//! Numerical verification lab for a sharp logarithmic Sobolev inequality on
//! closed submanifolds with unit mean curvature vector.
//!
//! The pipeline builds a concrete geometry (circle, lat-long sphere chart,
//! icosphere mesh, flat torus in R^4), computes curvature data, normalizes a
//! positive density, solves the associated potential equation, evaluates the
//! inequality and its baselines, and stress-tests the transport-map machinery
//! behind the proof: membership of the transport domain, Jacobian determinant
//! bounds, eigenvalue positivity, t-ranges, and a Monte Carlo shell covering
//! check.

pub mod error;
pub mod field;
pub mod geometry;
pub mod operator;

pub use error::{Error, Result};
