//! Weak-form weighted Laplace-Beltrami operators and a conjugate-gradient
//! solver for the singular Neumann-type system they produce.
//!
//! The assembled matrix L represents `phi -> div(f grad phi)` in weak form:
//! `(L phi)_i` approximates `w_i * div(f grad phi)(x_i)` with `w_i` the lumped
//! quadrature weight. L is symmetric with zero row sums, so constants are in
//! the kernel and the quadratic form is negative semidefinite up to assembly
//! rounding.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::geometry::chart::ChartGeometry;
use crate::geometry::mesh::TriangleMeshGeometry;
use crate::geometry::Geometry;

/// Compressed sparse rows, symmetric by construction.
#[derive(Debug, Clone)]
pub struct SparseSym {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col: Vec<usize>,
    pub val: Vec<f64>,
}

impl SparseSym {
    fn from_rows(rows: Vec<BTreeMap<usize, f64>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col = Vec::new();
        let mut val = Vec::new();
        row_ptr.push(0);
        for row in rows {
            for (c, v) in row {
                col.push(c);
                val.push(v);
            }
            row_ptr.push(col.len());
        }
        SparseSym { n, row_ptr, col, val }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.val[k] * x[self.col[k]];
            }
            y[i] = acc;
        }
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.col[k] == i {
                    d[i] = self.val[k];
                }
            }
        }
        d
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        for k in self.row_ptr[i]..self.row_ptr[i + 1] {
            if self.col[k] == j {
                return self.val[k];
            }
        }
        0.0
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col[k];
                if j >= i {
                    worst = worst.max((self.val[k] - self.entry(j, i)).abs());
                }
            }
        }
        worst
    }

    pub fn max_row_sum(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                self.val[self.row_ptr[i]..self.row_ptr[i + 1]]
                    .iter()
                    .sum::<f64>()
                    .abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Weak-form operator `phi -> div(f grad phi)` plus the lumped mass.
#[derive(Debug, Clone)]
pub struct WeightedLaplacian {
    pub geometry_id: u64,
    pub matrix: SparseSym,
    pub mass: Vec<f64>,
    /// Normalization for pointwise operator values. Equals `mass` on charts;
    /// on meshes it is the mixed Voronoi area, which keeps the pointwise
    /// Laplacian consistent at irregular-valence vertices.
    pub pointwise_mass: Vec<f64>,
    /// Most negative off-diagonal weight (obtuse cotangents stay unclamped).
    pub most_negative_offdiag: f64,
    /// Smallest and largest diagonal magnitude, a conditioning diagnostic.
    pub extremal_diag: (f64, f64),
}

impl WeightedLaplacian {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.apply(x)
    }

    /// Pointwise `div(f grad phi)`: weak application, renormalized.
    pub fn apply_pointwise(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.matrix.apply(x);
        for (v, w) in y.iter_mut().zip(&self.pointwise_mass) {
            *v /= *w;
        }
        y
    }
}

/// Assemble the f-weighted operator on either backend.
pub fn build_weighted_laplacian(f: &ScalarField, geometry: &Geometry) -> Result<WeightedLaplacian> {
    f.check_bound(geometry)?;
    f.check_positive_density()?;
    let matrix = match geometry {
        Geometry::Chart(c) => chart_fv_matrix(c, &f.values)?,
        Geometry::Mesh(m) => mesh_cotan_matrix(m, &f.values)?,
    };
    let mut most_negative = 0.0_f64;
    let mut dmin = f64::INFINITY;
    let mut dmax = 0.0_f64;
    for i in 0..matrix.n {
        for k in matrix.row_ptr[i]..matrix.row_ptr[i + 1] {
            let (j, v) = (matrix.col[k], matrix.val[k]);
            if j == i {
                dmin = dmin.min(v.abs());
                dmax = dmax.max(v.abs());
            } else {
                most_negative = most_negative.min(v);
            }
        }
    }
    let pointwise_mass = match geometry {
        Geometry::Chart(_) => geometry.weights().to_vec(),
        Geometry::Mesh(m) => m.voronoi_areas().to_vec(),
    };
    Ok(WeightedLaplacian {
        geometry_id: geometry.id(),
        matrix,
        mass: geometry.weights().to_vec(),
        pointwise_mass,
        most_negative_offdiag: most_negative,
        extremal_diag: (dmin, dmax),
    })
}

/// Flux-form finite volumes on the grid; needs an orthogonal parameterization.
/// Non-periodic axis ends get zero flux, which is exact when the metric
/// volume factor vanishes there (polar-type charts).
pub(crate) fn chart_fv_matrix(chart: &ChartGeometry, f: &[f64]) -> Result<SparseSym> {
    let n = chart.dim_n;
    let nodes = chart.len();
    // transport coefficient per node and axis: f * sqrt(g) * g^{aa}
    let mut q = vec![0.0; nodes * n];
    for node in 0..nodes {
        if n == 2 {
            let m = chart.metric_at(node);
            let scale = (m[0] * m[2]).sqrt();
            if m[1].abs() > 1e-12 * scale {
                return Err(Error::NonOrthogonalChart(m[1].abs()));
            }
        }
        let inv = chart.inv_metric_at(node);
        let sg = chart.sqrt_g(node);
        q[node * n] = f[node] * sg * inv[0];
        if n == 2 {
            q[node * n + 1] = f[node] * sg * inv[2];
        }
    }

    let cell: f64 = chart.spacing()[..n].iter().product();
    let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); nodes];
    for node in 0..nodes {
        for a in 0..n {
            if let Some(next) = chart.neighbor(node, a, 1) {
                if next == node {
                    continue;
                }
                let h = chart.spacing()[a];
                let kappa = 0.5 * (q[node * n + a] + q[next * n + a]) * cell / (h * h);
                *rows[node].entry(next).or_insert(0.0) += kappa;
                *rows[next].entry(node).or_insert(0.0) += kappa;
                *rows[node].entry(node).or_insert(0.0) -= kappa;
                *rows[next].entry(next).or_insert(0.0) -= kappa;
            }
        }
    }
    Ok(SparseSym::from_rows(rows))
}

/// Cotangent weights scaled by the arithmetic edge mean of `f`; negative
/// weights from obtuse triangles are kept.
pub(crate) fn mesh_cotan_matrix(mesh: &TriangleMeshGeometry, f: &[f64]) -> Result<SparseSym> {
    let nv = mesh.len();
    let d = mesh.ambient_dim;
    let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); nv];
    for face in &mesh.faces {
        for corner in 0..3 {
            let i = face[corner];
            let j = face[(corner + 1) % 3];
            let k = face[(corner + 2) % 3];
            // half cotangent at corner i weights edge (j, k)
            let pi = mesh.position(i);
            let pj = mesh.position(j);
            let pk = mesh.position(k);
            let e1: Vec<f64> = (0..d).map(|c| pj[c] - pi[c]).collect();
            let e2: Vec<f64> = (0..d).map(|c| pk[c] - pi[c]).collect();
            let dot12: f64 = e1.iter().zip(&e2).map(|(a, b)| a * b).sum();
            let g11: f64 = e1.iter().map(|a| a * a).sum();
            let g22: f64 = e2.iter().map(|a| a * a).sum();
            let cross = (g11 * g22 - dot12 * dot12).max(1e-300).sqrt();
            let w = 0.5 * dot12 / cross * 0.5 * (f[j] + f[k]);
            *rows[j].entry(k).or_insert(0.0) += w;
            *rows[k].entry(j).or_insert(0.0) += w;
            *rows[j].entry(j).or_insert(0.0) -= w;
            *rows[k].entry(k).or_insert(0.0) -= w;
        }
    }
    Ok(SparseSym::from_rows(rows))
}

/// Outcome of the singular Neumann solve.
#[derive(Debug, Clone)]
pub struct CgSolution {
    pub u: Vec<f64>,
    pub relative_residual: f64,
    pub iterations: usize,
}

/// Solve `L u = mass .* b` for the mean-zero `u`, with constants projected
/// out. `b` is the pointwise right-hand side; its weighted mean is removed
/// (the caller checks compatibility beforehand).
pub fn solve_neumann(
    lap: &WeightedLaplacian,
    b_pointwise: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<CgSolution> {
    let n = lap.matrix.n;
    let total_mass: f64 = lap.mass.iter().sum();
    let mean: f64 = b_pointwise
        .iter()
        .zip(&lap.mass)
        .map(|(b, w)| b * w)
        .sum::<f64>()
        / total_mass;

    // A = -L is PSD; rhs = -mass .* (b - mean)
    let rhs: Vec<f64> = b_pointwise
        .iter()
        .zip(&lap.mass)
        .map(|(b, w)| -(b - mean) * w)
        .collect();
    let rhs_norm = norm2(&rhs);
    if rhs_norm == 0.0 {
        return Ok(CgSolution {
            u: vec![0.0; n],
            relative_residual: 0.0,
            iterations: 0,
        });
    }

    let mut precond: Vec<f64> = lap.matrix.diagonal().iter().map(|d| -d).collect();
    let pmin = precond.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(pmin > 0.0) {
        // indefinite diagonal (heavily obtuse mesh): fall back to identity
        precond.iter_mut().for_each(|p| *p = 1.0);
    }

    let apply_a = |x: &[f64]| -> Vec<f64> {
        let mut y = lap.matrix.apply(x);
        y.iter_mut().for_each(|v| *v = -*v);
        y
    };

    let mut u = vec![0.0; n];
    let mut r = rhs.clone();
    let mut z: Vec<f64> = r.iter().zip(&precond).map(|(r, p)| r / p).collect();
    let mut p = z.clone();
    let mut rz: f64 = dotv(&r, &z);
    let mut residual = 1.0;

    for it in 0..max_iter {
        let ap = apply_a(&p);
        let pap = dotv(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::SolverDiverged {
                residual,
                iterations: it,
            });
        }
        let alpha = rz / pap;
        for i in 0..n {
            u[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if it % 50 == 49 {
            // counter rounding drift out of the zero-sum subspace
            let m = r.iter().sum::<f64>() / n as f64;
            r.iter_mut().for_each(|v| *v -= m);
        }
        residual = norm2(&r) / rhs_norm;
        if residual <= tol {
            // mean-zero gauge
            let um: f64 = u.iter().zip(&lap.mass).map(|(u, w)| u * w).sum::<f64>() / total_mass;
            u.iter_mut().for_each(|v| *v -= um);
            return Ok(CgSolution {
                u,
                relative_residual: residual,
                iterations: it + 1,
            });
        }
        for i in 0..n {
            z[i] = r[i] / precond[i];
        }
        let rz_next = dotv(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolverDiverged {
        residual,
        iterations: max_iter,
    })
}

fn dotv(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dotv(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ScalarField;
    use crate::geometry::{make_circle, make_clifford_torus, make_icosphere, make_sphere_chart};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn unit_operator(g: &Geometry) -> WeightedLaplacian {
        build_weighted_laplacian(&ScalarField::constant(g, 1.0), g).unwrap()
    }

    #[test]
    fn operator_is_symmetric_with_zero_row_sums() {
        for g in [
            Geometry::Chart(make_circle(128).unwrap()),
            Geometry::Chart(make_clifford_torus(24).unwrap()),
            Geometry::Chart(make_sphere_chart(2).unwrap()),
            Geometry::Mesh(make_icosphere(2).unwrap()),
        ] {
            let lap = unit_operator(&g);
            assert!(lap.matrix.max_asymmetry() <= 1e-12);
            assert!(lap.matrix.max_row_sum() <= 1e-10);
            // constants in the kernel
            let ones = vec![1.0; g.len()];
            let applied = lap.apply(&ones);
            assert!(applied.iter().all(|v| v.abs() <= 1e-10));
        }
    }

    #[test]
    fn circle_operator_reproduces_second_derivative() {
        // (cos)'' = -cos, second order in h
        let mut errs = Vec::new();
        for nodes in [128usize, 256] {
            let g = Geometry::Chart(make_circle(nodes).unwrap());
            let f = ScalarField::from_positions(&g, |p| p[0]); // cos(theta)
            let lap = unit_operator(&g);
            let applied = lap.apply_pointwise(&f.values);
            let worst = (0..g.len())
                .map(|i| (applied[i] + g.position(i)[0]).abs())
                .fold(0.0, f64::max);
            errs.push(worst);
        }
        assert!(errs[0] / errs[1] > 3.0, "ratios {errs:?}");
        assert!(errs[1] < 1e-3);
    }

    #[test]
    fn integration_by_parts_and_negativity() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for g in [
            Geometry::Chart(make_clifford_torus(16).unwrap()),
            Geometry::Mesh(make_icosphere(2).unwrap()),
        ] {
            let f = ScalarField::from_positions(&g, |p| (0.4 * p[0]).exp());
            let lap = build_weighted_laplacian(&f, &g).unwrap();
            for _ in 0..5 {
                let phi: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let psi: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let lphi = lap.apply(&phi);
                let lpsi = lap.apply(&psi);
                let lhs: f64 = dotv(&lphi, &psi);
                let rhs: f64 = dotv(&phi, &lpsi);
                assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
                assert!(lphi.iter().sum::<f64>().abs() <= 1e-10);
                // quadratic form nonpositive
                assert!(dotv(&lphi, &phi) <= 1e-10);
            }
        }
    }

    #[test]
    fn nonpositive_density_is_rejected() {
        let g = Geometry::Chart(make_circle(64).unwrap());
        let f = ScalarField::from_positions(&g, |p| p[0]); // changes sign
        assert!(matches!(
            build_weighted_laplacian(&f, &g),
            Err(Error::NonPositiveDensity(_))
        ));
    }

    #[test]
    fn cg_solves_poisson_on_circle() {
        // u = cos(theta) solves u'' = -cos(theta)
        let g = Geometry::Chart(make_circle(512).unwrap());
        let lap = unit_operator(&g);
        let b: Vec<f64> = (0..g.len()).map(|i| -g.position(i)[0]).collect();
        let sol = solve_neumann(&lap, &b, 1e-12, 10_000).unwrap();
        assert!(sol.relative_residual <= 1e-12);
        let worst = (0..g.len())
            .map(|i| (sol.u[i] - g.position(i)[0]).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-4, "max err {worst}");
    }

    #[test]
    fn cg_reports_nonconvergence() {
        let g = Geometry::Chart(make_circle(256).unwrap());
        let lap = unit_operator(&g);
        let b: Vec<f64> = (0..g.len()).map(|i| g.position(i)[1]).collect();
        let err = solve_neumann(&lap, &b, 1e-14, 2).unwrap_err();
        assert!(matches!(err, Error::SolverDiverged { .. }));
    }
}
