//! Scalar fields on a geometry: quadrature, intrinsic gradients.

use crate::error::{Error, Result};
use crate::geometry::chart::dot;
use crate::geometry::{ChartGeometry, Geometry, TriangleMeshGeometry};

/// One real value per geometry sample, bound to its carrier by id.
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub geometry_id: u64,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn new(geometry: &Geometry, values: Vec<f64>) -> Result<Self> {
        if values.len() != geometry.len() {
            return Err(Error::FieldLengthMismatch {
                field_len: values.len(),
                samples: geometry.len(),
            });
        }
        Ok(ScalarField {
            geometry_id: geometry.id(),
            values,
        })
    }

    pub fn constant(geometry: &Geometry, value: f64) -> Self {
        ScalarField {
            geometry_id: geometry.id(),
            values: vec![value; geometry.len()],
        }
    }

    /// Build from a function of the ambient position.
    pub fn from_positions(geometry: &Geometry, f: impl Fn(&[f64]) -> f64) -> Self {
        ScalarField {
            geometry_id: geometry.id(),
            values: (0..geometry.len()).map(|i| f(geometry.position(i))).collect(),
        }
    }

    pub fn check_bound(&self, geometry: &Geometry) -> Result<()> {
        if self.geometry_id != geometry.id() {
            return Err(Error::GeometryMismatch {
                field_id: self.geometry_id,
                geometry_id: geometry.id(),
            });
        }
        if self.values.len() != geometry.len() {
            return Err(Error::FieldLengthMismatch {
                field_len: self.values.len(),
                samples: geometry.len(),
            });
        }
        Ok(())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Error unless all values are strictly positive and finite.
    pub fn check_positive_density(&self) -> Result<()> {
        let min = self.min();
        if !(min > 0.0) || !self.values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonPositiveDensity(min));
        }
        Ok(())
    }

    pub fn scaled(&self, c: f64) -> Self {
        ScalarField {
            geometry_id: self.geometry_id,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }
}

/// Quadrature sum of the field against the lumped weights.
pub fn integrate(field: &ScalarField, geometry: &Geometry) -> Result<f64> {
    field.check_bound(geometry)?;
    Ok(field
        .values
        .iter()
        .zip(geometry.weights())
        .map(|(v, w)| v * w)
        .sum())
}

/// Per-sample intrinsic gradient as an ambient tangent vector field,
/// sample-major with stride `ambient_dim`.
pub fn gradient(field: &ScalarField, geometry: &Geometry) -> Result<Vec<f64>> {
    field.check_bound(geometry)?;
    match geometry {
        Geometry::Chart(c) => chart_gradient(&field.values, c),
        Geometry::Mesh(m) => Ok(mesh_gradient(&field.values, m)),
    }
}

/// Chart gradient: metric-contracted central differences of the node values.
/// Non-periodic axes use one-sided second-order stencils at their ends.
fn chart_gradient(values: &[f64], chart: &ChartGeometry) -> Result<Vec<f64>> {
    let d = chart.ambient_dim;
    let n = chart.dim_n;
    let samples = chart.len();
    let mut out = vec![0.0; samples * d];
    for node in 0..samples {
        let mut partials = [0.0_f64; 2];
        for a in 0..n {
            partials[a] = fd_partial(values, chart, node, a);
        }
        let inv = chart.inv_metric_at(node);
        // grad = g^{ab} (d_b f) dX_a
        let contra = if n == 1 {
            [inv[0] * partials[0], 0.0]
        } else {
            [
                inv[0] * partials[0] + inv[1] * partials[1],
                inv[1] * partials[0] + inv[2] * partials[1],
            ]
        };
        let g = &mut out[node * d..(node + 1) * d];
        for a in 0..n {
            let t = chart.d1_at(node, a);
            for k in 0..d {
                g[k] += contra[a] * t[k];
            }
        }
    }
    Ok(out)
}

/// Second-order partial derivative of grid values along one axis.
pub(crate) fn fd_partial(values: &[f64], chart: &ChartGeometry, node: usize, axis: usize) -> f64 {
    let h = chart.spacing()[axis];
    match (
        chart.neighbor(node, axis, -1),
        chart.neighbor(node, axis, 1),
    ) {
        (Some(prev), Some(next)) => (values[next] - values[prev]) / (2.0 * h),
        (None, Some(next)) => {
            let next2 = chart.neighbor(node, axis, 2).expect("grid too small");
            (-3.0 * values[node] + 4.0 * values[next] - values[next2]) / (2.0 * h)
        }
        (Some(prev), None) => {
            let prev2 = chart.neighbor(node, axis, -2).expect("grid too small");
            (3.0 * values[node] - 4.0 * values[prev] + values[prev2]) / (2.0 * h)
        }
        (None, None) => 0.0,
    }
}

/// Mesh gradient: per-face linear gradients, averaged to vertices with face
/// area weights, then projected onto the vertex tangent plane implied by the
/// averaged gradient itself (the raw average is kept tangent per face).
fn mesh_gradient(values: &[f64], mesh: &TriangleMeshGeometry) -> Vec<f64> {
    let d = mesh.ambient_dim;
    let nv = mesh.len();
    let mut out = vec![0.0; nv * d];
    let mut weight = vec![0.0; nv];

    for (fi, f) in mesh.faces.iter().enumerate() {
        let [a, b, c] = *f;
        let (pa, pb, pc) = (mesh.position(a), mesh.position(b), mesh.position(c));
        let e1: Vec<f64> = (0..d).map(|k| pb[k] - pa[k]).collect();
        let e2: Vec<f64> = (0..d).map(|k| pc[k] - pa[k]).collect();
        let (g11, g12, g22) = (dot(&e1, &e1), dot(&e1, &e2), dot(&e2, &e2));
        let det = g11 * g22 - g12 * g12;
        let (u, v) = (values[b] - values[a], values[c] - values[a]);
        // gradient of the linear interpolant in the face plane
        let c1 = (g22 * u - g12 * v) / det;
        let c2 = (g11 * v - g12 * u) / det;
        let area = mesh.face_area(fi);
        for &vid in f {
            weight[vid] += area;
            for k in 0..d {
                out[vid * d + k] += area * (c1 * e1[k] + c2 * e2[k]);
            }
        }
    }
    for vid in 0..nv {
        for k in 0..d {
            out[vid * d + k] /= weight[vid];
        }
    }
    out
}

/// Pointwise norms of a sample-major vector field.
pub fn norms(vectors: &[f64], ambient_dim: usize) -> Vec<f64> {
    vectors
        .chunks(ambient_dim)
        .map(|v| dot(v, v).sqrt())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_circle, make_icosphere, make_sphere_chart};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn integrate_constants() {
        let g = Geometry::Chart(make_circle(1024).unwrap());
        let two = ScalarField::constant(&g, 2.0);
        assert_relative_eq!(integrate(&two, &g).unwrap(), 4.0 * PI, epsilon = 1e-6);
        let zero = ScalarField::constant(&g, 0.0);
        assert_eq!(integrate(&zero, &g).unwrap(), 0.0);
    }

    #[test]
    fn integrate_unit_on_refined_sphere_mesh() {
        let g = Geometry::Mesh(make_icosphere(4).unwrap());
        let one = ScalarField::constant(&g, 1.0);
        let a = integrate(&one, &g).unwrap();
        assert!((a - 4.0 * PI).abs() / (4.0 * PI) < 5e-3);
    }

    #[test]
    fn field_binding_is_enforced() {
        let g1 = Geometry::Chart(make_circle(64).unwrap());
        let g2 = Geometry::Chart(make_circle(64).unwrap());
        let f = ScalarField::constant(&g1, 1.0);
        assert!(matches!(
            integrate(&f, &g2),
            Err(Error::GeometryMismatch { .. })
        ));
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        for g in [
            Geometry::Chart(make_sphere_chart(2).unwrap()),
            Geometry::Mesh(make_icosphere(2).unwrap()),
        ] {
            let f = ScalarField::constant(&g, 3.7);
            let grad = gradient(&f, &g).unwrap();
            assert!(grad.iter().all(|v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn gradient_is_linear() {
        let g = Geometry::Chart(make_sphere_chart(2).unwrap());
        let f1 = ScalarField::from_positions(&g, |p| p[2]);
        let f2 = ScalarField::from_positions(&g, |p| p[0] * p[1]);
        let combo = ScalarField::new(
            &g,
            f1.values
                .iter()
                .zip(&f2.values)
                .map(|(a, b)| 2.0 * a - 0.5 * b)
                .collect(),
        )
        .unwrap();
        let g1 = gradient(&f1, &g).unwrap();
        let g2 = gradient(&f2, &g).unwrap();
        let gc = gradient(&combo, &g).unwrap();
        for k in 0..gc.len() {
            assert_relative_eq!(gc[k], 2.0 * g1[k] - 0.5 * g2[k], epsilon = 1e-12);
        }
    }

    #[test]
    fn height_gradient_on_sphere_chart() {
        // f = x3 on S^2 has |grad f|^2 = 1 - x3^2
        let g = Geometry::Chart(make_sphere_chart(4).unwrap());
        let f = ScalarField::from_positions(&g, |p| p[2]);
        let grad = gradient(&f, &g).unwrap();
        let n = norms(&grad, 3);
        let mut worst: f64 = 0.0;
        for i in 0..g.len() {
            let x3 = g.position(i)[2];
            worst = worst.max((n[i] * n[i] - (1.0 - x3 * x3)).abs());
        }
        assert!(worst <= 0.02, "max error {worst}");
    }

    #[test]
    fn height_gradient_on_sphere_mesh() {
        let g = Geometry::Mesh(make_icosphere(4).unwrap());
        let f = ScalarField::from_positions(&g, |p| p[2]);
        let grad = gradient(&f, &g).unwrap();
        let n = norms(&grad, 3);
        let mut worst: f64 = 0.0;
        for i in 0..g.len() {
            let x3 = g.position(i)[2];
            worst = worst.max((n[i] * n[i] - (1.0 - x3 * x3)).abs());
        }
        assert!(worst <= 0.02, "max error {worst}");
    }

    #[test]
    fn coordinate_gradients_sum_to_dimension() {
        // sum_k |grad x_k|^2 = n on the unit sphere
        for (g, n) in [
            (Geometry::Chart(make_sphere_chart(4).unwrap()), 2.0),
            (Geometry::Mesh(make_icosphere(4).unwrap()), 2.0),
            (Geometry::Chart(make_circle(1024).unwrap()), 1.0),
        ] {
            let d = g.ambient_dim();
            let mut total = vec![0.0; g.len()];
            for k in 0..d {
                let f = ScalarField::from_positions(&g, |p| p[k]);
                let grad = gradient(&f, &g).unwrap();
                for (i, v) in grad.chunks(d).enumerate() {
                    total[i] += dot(v, v);
                }
            }
            for (i, t) in total.iter().enumerate() {
                assert!(
                    (t - n).abs() / n <= 0.02,
                    "sample {i}: sum {t} expected {n}"
                );
            }
        }
    }
}
