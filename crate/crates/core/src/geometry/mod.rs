//! Embedded submanifold carriers and their curvature data.
//!
//! Two backends share one interface: structured parametric charts with
//! analytic derivatives, and closed triangle meshes. Both expose sample
//! positions and quadrature weights; curvature extraction and operator
//! assembly dispatch on the backend.

pub mod chart;
pub mod curvature;
pub mod io;
pub mod mesh;

use std::sync::atomic::{AtomicU64, Ordering};

pub use chart::{make_circle, make_clifford_torus, make_sphere_chart, ChartGeometry};
pub use curvature::{check_unit_mean_curvature, compute_curvature, CurvatureData, UnitCurvatureCheck};
pub use mesh::{make_disconnected_spheres, make_icosphere, TriangleMeshGeometry};

use crate::error::{Error, Result};

static NEXT_GEOMETRY_ID: AtomicU64 = AtomicU64::new(1);

pub(crate) fn next_geometry_id() -> u64 {
    NEXT_GEOMETRY_ID.fetch_add(1, Ordering::Relaxed)
}

/// A sampled submanifold, chart- or mesh-backed.
#[derive(Debug, Clone)]
pub enum Geometry {
    Chart(ChartGeometry),
    Mesh(TriangleMeshGeometry),
}

impl From<ChartGeometry> for Geometry {
    fn from(c: ChartGeometry) -> Self {
        Geometry::Chart(c)
    }
}

impl From<TriangleMeshGeometry> for Geometry {
    fn from(m: TriangleMeshGeometry) -> Self {
        Geometry::Mesh(m)
    }
}

impl Geometry {
    pub fn id(&self) -> u64 {
        match self {
            Geometry::Chart(c) => c.id(),
            Geometry::Mesh(m) => m.id(),
        }
    }

    /// Number of samples (grid nodes or mesh vertices).
    pub fn len(&self) -> usize {
        match self {
            Geometry::Chart(c) => c.len(),
            Geometry::Mesh(m) => m.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim_n(&self) -> usize {
        match self {
            Geometry::Chart(c) => c.dim_n,
            Geometry::Mesh(_) => 2,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            Geometry::Chart(c) => c.ambient_dim,
            Geometry::Mesh(m) => m.ambient_dim,
        }
    }

    /// Codimension of the embedding.
    pub fn codim(&self) -> usize {
        self.ambient_dim() - self.dim_n()
    }

    pub fn position(&self, sample: usize) -> &[f64] {
        match self {
            Geometry::Chart(c) => c.position(sample),
            Geometry::Mesh(m) => m.position(sample),
        }
    }

    /// Lumped quadrature weights per sample.
    pub fn weights(&self) -> &[f64] {
        match self {
            Geometry::Chart(c) => c.weights(),
            Geometry::Mesh(m) => m.weights(),
        }
    }

    pub fn total_volume(&self) -> f64 {
        self.weights().iter().sum()
    }

    /// Largest sample spacing in ambient length units.
    pub fn max_spacing(&self) -> f64 {
        match self {
            Geometry::Chart(c) => c.max_spacing(),
            Geometry::Mesh(m) => m.max_edge_length(),
        }
    }

    pub fn as_chart(&self) -> Option<&ChartGeometry> {
        match self {
            Geometry::Chart(c) => Some(c),
            Geometry::Mesh(_) => None,
        }
    }

    pub fn as_mesh(&self) -> Option<&TriangleMeshGeometry> {
        match self {
            Geometry::Chart(_) => None,
            Geometry::Mesh(m) => Some(m),
        }
    }

    pub fn scaled(&self, c: f64) -> Result<Geometry> {
        Ok(match self {
            Geometry::Chart(g) => Geometry::Chart(g.scaled(c)?),
            Geometry::Mesh(m) => Geometry::Mesh(m.scaled(c)?),
        })
    }

    pub fn embed_trailing_zeros(&self, extra: usize) -> Result<Geometry> {
        Ok(match self {
            Geometry::Chart(g) => Geometry::Chart(g.embed_trailing_zeros(extra)),
            Geometry::Mesh(m) => Geometry::Mesh(m.embed_trailing_zeros(extra)?),
        })
    }

    /// Max deviation of sample norms from 1 (unit-sphere ambient check).
    pub fn max_position_norm_deviation(&self) -> f64 {
        let d = self.ambient_dim();
        (0..self.len())
            .map(|i| {
                let p = self.position(i);
                ((0..d).map(|k| p[k] * p[k]).sum::<f64>().sqrt() - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Unit sphere S^n: a uniform polygonal circle for n = 1, a subdivided
/// icosahedron for n = 2. The lat-long chart variant of S^2 is
/// [`make_sphere_chart`].
pub fn make_sphere(n: usize, refinement: usize) -> Result<Geometry> {
    match n {
        1 => Ok(Geometry::Chart(make_circle(64 << refinement)?)),
        2 => Ok(Geometry::Mesh(make_icosphere(refinement)?)),
        other => Err(Error::UnsupportedDimension(other)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn make_sphere_dispatches_on_dimension() {
        let circle = make_sphere(1, 2).unwrap();
        assert_eq!(circle.len(), 256);
        assert!((circle.total_volume() - 2.0 * PI).abs() < 1e-10);

        let sphere = make_sphere(2, 2).unwrap();
        assert_eq!(sphere.dim_n(), 2);
        assert_eq!(sphere.codim(), 1);

        assert!(matches!(make_sphere(3, 2), Err(Error::UnsupportedDimension(3))));
    }

    #[test]
    fn geometry_ids_are_unique() {
        let a = make_sphere(1, 1).unwrap();
        let b = make_sphere(1, 1).unwrap();
        assert_ne!(a.id(), b.id());
    }
}
