//! Second fundamental form, mean curvature vector and umbilicity defect.
//!
//! Chart backend: sff from analytic second derivatives projected to the
//! normal space. Mesh backend: the mean curvature vector comes from the
//! cotangent Laplacian applied to the coordinate functions, the sff from a
//! quadratic height fit over the two-ring; the two estimators cross-validate
//! each other and their disagreement feeds the run-level tolerance.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::geometry::chart::{dot, sym_pairs, ChartGeometry};
use crate::geometry::mesh::TriangleMeshGeometry;
use crate::geometry::Geometry;
use crate::operator::mesh_cotan_matrix;

/// Per-sample frames and curvature of an embedded submanifold.
#[derive(Debug, Clone)]
pub struct CurvatureData {
    pub geometry_id: u64,
    pub dim_n: usize,
    pub codim_m: usize,
    pub samples: usize,
    /// `n` orthonormal tangent vectors per sample, sample-major then vector.
    pub(crate) tangent_basis: Vec<f64>,
    /// `m` orthonormal normal vectors per sample; the first is aligned with H
    /// wherever `|H| > 1e-8`.
    pub(crate) normal_basis: Vec<f64>,
    /// Components `h^a_{ij}` in the orthonormal frames; sample-major, then
    /// normal index, then symmetric pair (00, 01, 11).
    pub(crate) sff: Vec<f64>,
    /// Mean curvature vector per sample, ambient components.
    pub(crate) mean_curvature: Vec<f64>,
    /// Max-norm of `sff - g (x) H` per sample.
    pub umbilicity_defect: Vec<f64>,
    ambient_dim: usize,
    /// Max disagreement between the two mean-curvature estimators (mesh) or
    /// between the unweighted Laplacian of the coordinates and `n H` (chart),
    /// in ambient components.
    pub consistency_error: f64,
}

impl CurvatureData {
    pub fn tangent(&self, sample: usize, i: usize) -> &[f64] {
        let off = (sample * self.dim_n + i) * self.ambient_dim;
        &self.tangent_basis[off..off + self.ambient_dim]
    }

    pub fn normal(&self, sample: usize, a: usize) -> &[f64] {
        let off = (sample * self.codim_m + a) * self.ambient_dim;
        &self.normal_basis[off..off + self.ambient_dim]
    }

    pub fn mean_curvature(&self, sample: usize) -> &[f64] {
        &self.mean_curvature[sample * self.ambient_dim..(sample + 1) * self.ambient_dim]
    }

    /// `h^a_{ij}` with `(i, j)` a symmetric pair index (00, 01, 11).
    pub fn sff_component(&self, sample: usize, a: usize, pair: usize) -> f64 {
        let npairs = self.dim_n * (self.dim_n + 1) / 2;
        self.sff[(sample * self.codim_m + a) * npairs + pair]
    }

    /// sff contracted with a normal vector given by frame coefficients
    /// (`coeffs[a]` multiplies normal `a`), returned as a symmetric n x n matrix.
    pub fn sff_contract(&self, sample: usize, coeffs: &[f64]) -> DMatrix<f64> {
        let n = self.dim_n;
        let mut m = DMatrix::zeros(n, n);
        for (p, &(i, j)) in sym_pairs(n).iter().enumerate() {
            let v: f64 = (0..self.codim_m)
                .map(|a| coeffs[a] * self.sff_component(sample, a, p))
                .sum();
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        m
    }

    /// Normal-frame coefficients of the mean curvature vector.
    pub fn h_coeffs(&self, sample: usize) -> Vec<f64> {
        let h = self.mean_curvature(sample);
        (0..self.codim_m)
            .map(|a| dot(h, self.normal(sample, a)))
            .collect()
    }

    pub fn mean_curvature_norm(&self, sample: usize) -> f64 {
        let h = self.mean_curvature(sample);
        dot(h, h).sqrt()
    }

    /// Largest tangential component of H relative to |H| over all samples.
    pub fn max_tangential_h_fraction(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for s in 0..self.samples {
            let h = self.mean_curvature(s);
            let norm = dot(h, h).sqrt();
            if norm < 1e-14 {
                continue;
            }
            let tang: f64 = (0..self.dim_n)
                .map(|i| dot(h, self.tangent(s, i)).powi(2))
                .sum::<f64>()
                .sqrt();
            worst = worst.max(tang / norm);
        }
        worst
    }

    pub fn max_umbilicity_defect(&self) -> f64 {
        self.umbilicity_defect.iter().cloned().fold(0.0, f64::max)
    }
}

/// Verdict of the unit-mean-curvature hypothesis check.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct UnitCurvatureCheck {
    pub ok: bool,
    pub max_deviation: f64,
}

/// True iff `max_s ||H(s)| - 1| <= tol`.
pub fn check_unit_mean_curvature(curvature: &CurvatureData, tol: f64) -> UnitCurvatureCheck {
    let max_deviation = (0..curvature.samples)
        .map(|s| (curvature.mean_curvature_norm(s) - 1.0).abs())
        .fold(0.0, f64::max);
    UnitCurvatureCheck {
        ok: max_deviation <= tol,
        max_deviation,
    }
}

pub fn compute_curvature(geometry: &Geometry) -> Result<CurvatureData> {
    match geometry {
        Geometry::Chart(c) => chart_curvature(c),
        Geometry::Mesh(m) => mesh_curvature(m),
    }
}

// ---------------------------------------------------------------------------
// Chart backend
// ---------------------------------------------------------------------------

fn chart_curvature(chart: &ChartGeometry) -> Result<CurvatureData> {
    let n = chart.dim_n;
    let d = chart.ambient_dim;
    let m = d - n;
    let samples = chart.len();
    let npairs = n * (n + 1) / 2;

    let mut tangent_basis = vec![0.0; samples * n * d];
    let mut normal_basis = vec![0.0; samples * m * d];
    let mut sff = vec![0.0; samples * m * npairs];
    let mut mean_curvature = vec![0.0; samples * d];
    let mut defect = vec![0.0; samples];

    for s in 0..samples {
        // Orthonormal tangent frame E_i = c_i^a dX_a (Gram-Schmidt).
        let mut frame: Vec<Vec<f64>> = Vec::with_capacity(n);
        let mut coeff = [[0.0_f64; 2]; 2];
        {
            let t0 = chart.d1_at(s, 0);
            let n0 = dot(t0, t0).sqrt();
            frame.push(t0.iter().map(|x| x / n0).collect());
            coeff[0][0] = 1.0 / n0;
            if n == 2 {
                let t1 = chart.d1_at(s, 1);
                let proj = dot(t1, &frame[0]);
                let mut e1: Vec<f64> = t1
                    .iter()
                    .zip(&frame[0])
                    .map(|(x, e)| x - proj * e)
                    .collect();
                let n1 = dot(&e1, &e1).sqrt();
                if n1 < 1e-14 {
                    return Err(Error::NonImmersion { sample: s, det: 0.0 });
                }
                e1.iter_mut().for_each(|x| *x /= n1);
                // E_2 = (-proj*c00/n1) dX_0 + (1/n1) dX_1
                coeff[1][0] = -proj * coeff[0][0] / n1;
                coeff[1][1] = 1.0 / n1;
                frame.push(e1);
            }
        }
        for (i, e) in frame.iter().enumerate() {
            tangent_basis[(s * n + i) * d..(s * n + i + 1) * d].copy_from_slice(e);
        }

        // sff(E_i, E_j) = sum_ab c_i^a c_j^b P_perp(d2_ab), as ambient vectors.
        let mut sff_vec = vec![vec![0.0; d]; npairs];
        for (p, &(i, j)) in sym_pairs(n).iter().enumerate() {
            let mut v = vec![0.0; d];
            for a in 0..n {
                for b in 0..n {
                    let ci = coeff[i][a];
                    let cj = coeff[j][b];
                    if ci == 0.0 || cj == 0.0 {
                        continue;
                    }
                    let dd = chart.d2_at(s, a, b);
                    for k in 0..d {
                        v[k] += ci * cj * dd[k];
                    }
                }
            }
            // project out the tangent part
            for e in &frame {
                let pr = dot(&v, e);
                for k in 0..d {
                    v[k] -= pr * e[k];
                }
            }
            sff_vec[p] = v;
        }

        // H = (1/n) sum_i sff(E_i, E_i)
        let h = &mut mean_curvature[s * d..(s + 1) * d];
        for i in 0..n {
            let p = diag_pair(n, i);
            for k in 0..d {
                h[k] += sff_vec[p][k] / n as f64;
            }
        }

        let normals = orthonormal_completion(&frame, h, d, m)
            .ok_or(Error::NonImmersion { sample: s, det: 0.0 })?;
        for (a, nu) in normals.iter().enumerate() {
            normal_basis[(s * m + a) * d..(s * m + a + 1) * d].copy_from_slice(nu);
        }

        // frame components and umbilicity defect
        let mut worst: f64 = 0.0;
        for a in 0..m {
            let nu = &normals[a];
            let ha = dot(h, nu);
            for (p, &(i, j)) in sym_pairs(n).iter().enumerate() {
                let comp = dot(&sff_vec[p], nu);
                sff[(s * m + a) * npairs + p] = comp;
                let target = if i == j { ha } else { 0.0 };
                worst = worst.max((comp - target).abs());
            }
        }
        defect[s] = worst;
    }

    let mut data = CurvatureData {
        geometry_id: chart.id(),
        dim_n: n,
        codim_m: m,
        samples,
        tangent_basis,
        normal_basis,
        sff,
        mean_curvature,
        umbilicity_defect: defect,
        ambient_dim: d,
        consistency_error: 0.0,
    };
    data.consistency_error = chart_consistency_error(chart, &data);
    Ok(data)
}

/// Max component error of the discrete identity (Laplacian of the coordinate
/// functions) = n H, with the Laplacian from the unweighted weak operator.
fn chart_consistency_error(chart: &ChartGeometry, data: &CurvatureData) -> f64 {
    use crate::operator::chart_fv_matrix;
    let d = chart.ambient_dim;
    let n = chart.dim_n as f64;
    let ones = vec![1.0; chart.len()];
    let lap = match chart_fv_matrix(chart, &ones) {
        Ok(l) => l,
        Err(_) => return f64::NAN,
    };
    let mut worst: f64 = 0.0;
    for k in 0..d {
        let coord: Vec<f64> = (0..chart.len()).map(|i| chart.position(i)[k]).collect();
        let applied = lap.apply(&coord);
        for i in 0..chart.len() {
            let pointwise = applied[i] / chart.weight(i);
            worst = worst.max((pointwise - n * data.mean_curvature(i)[k]).abs());
        }
    }
    worst
}

fn diag_pair(n: usize, i: usize) -> usize {
    if n == 1 {
        0
    } else if i == 0 {
        0
    } else {
        2
    }
}

/// Orthonormal basis of the normal space. The first vector follows `h` when
/// `|h| > 1e-8`; the rest come from the ambient axes in index order.
fn orthonormal_completion(
    tangent: &[Vec<f64>],
    h: &[f64],
    d: usize,
    m: usize,
) -> Option<Vec<Vec<f64>>> {
    let mut basis: Vec<Vec<f64>> = tangent.to_vec();
    let mut normals: Vec<Vec<f64>> = Vec::with_capacity(m);

    let push_candidate = |cand: &[f64], basis: &mut Vec<Vec<f64>>, normals: &mut Vec<Vec<f64>>| -> bool {
        let mut v = cand.to_vec();
        for e in basis.iter() {
            let pr = dot(&v, e);
            for k in 0..d {
                v[k] -= pr * e[k];
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-6 {
            v.iter_mut().for_each(|x| *x /= norm);
            basis.push(v.clone());
            normals.push(v);
            true
        } else {
            false
        }
    };

    if dot(h, h).sqrt() > 1e-8 {
        push_candidate(h, &mut basis, &mut normals);
    }
    let mut axis = vec![0.0; d];
    for k in 0..d {
        if normals.len() == m {
            break;
        }
        axis.fill(0.0);
        axis[k] = 1.0;
        push_candidate(&axis, &mut basis, &mut normals);
    }
    (normals.len() == m).then_some(normals)
}

// ---------------------------------------------------------------------------
// Mesh backend
// ---------------------------------------------------------------------------

fn mesh_curvature(mesh: &TriangleMeshGeometry) -> Result<CurvatureData> {
    let d = mesh.ambient_dim;
    let n = 2usize;
    let m = d - n;
    let samples = mesh.len();
    let npairs = 3;

    // H from the cotangent Laplacian: weak L applied to coordinates, divided
    // by the pointwise (mixed Voronoi) area and n.
    let ones = vec![1.0; samples];
    let lap = mesh_cotan_matrix(mesh, &ones)?;
    let areas = mesh.voronoi_areas();
    let mut mean_curvature = vec![0.0; samples * d];
    for k in 0..d {
        let coord: Vec<f64> = (0..samples).map(|i| mesh.position(i)[k]).collect();
        let applied = lap.apply(&coord);
        for i in 0..samples {
            mean_curvature[i * d + k] = applied[i] / (areas[i] * n as f64);
        }
    }

    let mut tangent_basis = vec![0.0; samples * n * d];
    let mut normal_basis = vec![0.0; samples * m * d];
    let mut sff = vec![0.0; samples * m * npairs];
    let mut defect = vec![0.0; samples];
    let mut consistency: f64 = 0.0;

    for v in 0..samples {
        let ring2 = mesh.two_ring(v);
        let pv = mesh.position(v);

        // Tangent plane: dominant right-singular vectors of the one-ring edges.
        let ring1 = mesh.one_ring(v);
        let mut edges = DMatrix::zeros(ring1.len(), d);
        for (r, &w) in ring1.iter().enumerate() {
            let pw = mesh.position(w);
            for k in 0..d {
                edges[(r, k)] = pw[k] - pv[k];
            }
        }
        let svd = edges.svd(false, true);
        let vt = svd.v_t.expect("svd of edge matrix");
        let mut frame: Vec<Vec<f64>> = Vec::with_capacity(n);
        for i in 0..n {
            frame.push((0..d).map(|k| vt[(i, k)]).collect());
        }
        for (i, e) in frame.iter().enumerate() {
            tangent_basis[(v * n + i) * d..(v * n + i + 1) * d].copy_from_slice(e);
        }

        let h = &mean_curvature[v * d..(v + 1) * d];
        let normals = orthonormal_completion(&frame, h, d, m)
            .ok_or(Error::RankDeficientFit { vertex: v })?;
        for (a, nu) in normals.iter().enumerate() {
            normal_basis[(v * m + a) * d..(v * m + a + 1) * d].copy_from_slice(nu);
        }

        // Quadratic height fit over the two-ring, one column per normal.
        let rows = ring2.len();
        if rows < 5 {
            return Err(Error::RankDeficientFit { vertex: v });
        }
        let mut design = DMatrix::zeros(rows, 5);
        let mut heights = DMatrix::zeros(rows, m);
        for (r, &w) in ring2.iter().enumerate() {
            let pw = mesh.position(w);
            let rel: Vec<f64> = (0..d).map(|k| pw[k] - pv[k]).collect();
            let xi = dot(&rel, &frame[0]);
            let eta = dot(&rel, &frame[1]);
            design[(r, 0)] = xi;
            design[(r, 1)] = eta;
            design[(r, 2)] = 0.5 * xi * xi;
            design[(r, 3)] = xi * eta;
            design[(r, 4)] = 0.5 * eta * eta;
            for (a, nu) in normals.iter().enumerate() {
                heights[(r, a)] = dot(&rel, nu);
            }
        }
        let svd = design.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if !(smin > 1e-10 * smax) {
            return Err(Error::RankDeficientFit { vertex: v });
        }

        let mut fit_h = vec![0.0; d];
        let mut worst: f64 = 0.0;
        for a in 0..m {
            let rhs = DVector::from_iterator(rows, (0..rows).map(|r| heights[(r, a)]));
            let sol = svd.solve(&rhs, 1e-12 * smax).expect("lsq solve");
            // sff components in the orthonormal tangent frame
            let comps = [sol[2], sol[3], sol[4]]; // h_00, h_01, h_11
            let ha = dot(h, &normals[a]);
            for (p, &(i, j)) in sym_pairs(n).iter().enumerate() {
                sff[(v * m + a) * npairs + p] = comps[p];
                let target = if i == j { ha } else { 0.0 };
                worst = worst.max((comps[p] - target).abs());
            }
            let trace = comps[0] + comps[2];
            for k in 0..d {
                fit_h[k] += 0.5 * trace * normals[a][k];
            }
        }
        defect[v] = worst;

        // Cross-validation of the two mean-curvature estimators, in n*H units.
        let disagreement = (0..d)
            .map(|k| (n as f64 * (fit_h[k] - h[k])).abs())
            .fold(0.0, f64::max);
        consistency = consistency.max(disagreement);
    }

    Ok(CurvatureData {
        geometry_id: mesh.id(),
        dim_n: n,
        codim_m: m,
        samples,
        tangent_basis,
        normal_basis,
        sff,
        mean_curvature,
        umbilicity_defect: defect,
        ambient_dim: d,
        consistency_error: consistency,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_circle, make_clifford_torus, make_icosphere, make_sphere_chart};
    use approx::assert_relative_eq;

    #[test]
    fn circle_has_unit_curvature_toward_center() {
        let g = Geometry::Chart(make_circle(128).unwrap());
        let c = compute_curvature(&g).unwrap();
        for s in (0..g.len()).step_by(17) {
            let h = c.mean_curvature(s);
            let p = g.position(s);
            // H = -x exactly
            assert_relative_eq!(h[0], -p[0], epsilon = 1e-12);
            assert_relative_eq!(h[1], -p[1], epsilon = 1e-12);
        }
        let check = check_unit_mean_curvature(&c, 1e-10);
        assert!(check.ok);
        assert!(check.max_deviation < 1e-12);
        assert!(c.max_umbilicity_defect() < 1e-12);
    }

    #[test]
    fn sphere_chart_is_totally_umbilical_with_outward_sff() {
        let g = Geometry::Chart(make_sphere_chart(3).unwrap());
        let c = compute_curvature(&g).unwrap();
        assert!(c.max_umbilicity_defect() < 1e-10);
        assert!(c.max_tangential_h_fraction() < 1e-8);
        // sff^nu_ij = -g_ij with nu = x: in the orthonormal frame the first
        // normal follows H = -x, so h^0_ij = +delta_ij.
        for s in (0..g.len()).step_by(531) {
            let hc = c.h_coeffs(s);
            assert_relative_eq!(hc[0], 1.0, epsilon = 1e-10);
            assert_relative_eq!(c.sff_component(s, 0, 0), 1.0, epsilon = 1e-10);
            assert_relative_eq!(c.sff_component(s, 0, 1), 0.0, epsilon = 1e-10);
            let nu = c.normal(s, 0);
            let p = g.position(s);
            for k in 0..3 {
                assert_relative_eq!(nu[k], -p[k], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn clifford_torus_has_unit_h_and_split_sff() {
        let g = Geometry::Chart(make_clifford_torus(32).unwrap());
        let c = compute_curvature(&g).unwrap();
        let check = check_unit_mean_curvature(&c, 1e-10);
        assert!(check.ok, "deviation {}", check.max_deviation);
        for s in (0..g.len()).step_by(73) {
            // H = -position
            let h = c.mean_curvature(s);
            let p = g.position(s);
            for k in 0..4 {
                assert_relative_eq!(h[k], -p[k], epsilon = 1e-10);
            }
            // second normal direction carries eigenvalues of opposite sign
            assert!(c.umbilicity_defect[s] > 0.1);
            let h1_00 = c.sff_component(s, 1, 0);
            let h1_11 = c.sff_component(s, 1, 2);
            assert!(h1_00 * h1_11 < 0.0);
            assert_relative_eq!(h1_00.abs(), 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn radius_two_sphere_fails_unit_check() {
        let g = Geometry::Chart(make_sphere_chart(2).unwrap())
            .scaled(2.0)
            .unwrap();
        let c = compute_curvature(&g).unwrap();
        let check = check_unit_mean_curvature(&c, 1e-6);
        assert!(!check.ok);
        assert_relative_eq!(check.max_deviation, 0.5, epsilon = 1e-10);
    }

    #[test]
    fn icosphere_mesh_curvature_approximates_unit() {
        let g = Geometry::Mesh(make_icosphere(3).unwrap());
        let c = compute_curvature(&g).unwrap();
        let check = check_unit_mean_curvature(&c, 5e-2);
        assert!(check.ok, "deviation {}", check.max_deviation);
        // umbilical within discretization error
        assert!(c.max_umbilicity_defect() < 0.1, "defect {}", c.max_umbilicity_defect());
        assert!(c.consistency_error < 0.2, "consistency {}", c.consistency_error);
    }

    #[test]
    fn umbilicity_defect_is_rotation_invariant() {
        // rotation in the (0,1) and (2,3) planes of R^4
        let (a, b) = (0.4_f64, 1.1_f64);
        let (ca, sa, cb, sb) = (a.cos(), a.sin(), b.cos(), b.sin());
        let rot = move |p: &[f64]| {
            vec![
                ca * p[0] - sa * p[1],
                sa * p[0] + ca * p[1],
                cb * p[2] - sb * p[3],
                sb * p[2] + cb * p[3],
            ]
        };
        let base = make_clifford_torus(16).unwrap();
        let rotated = {
            let mut r = base.clone();
            let d = r.ambient_dim;
            let n_items_pos = r.positions.len() / d;
            for i in 0..n_items_pos {
                let v = rot(&r.positions[i * d..(i + 1) * d]);
                r.positions[i * d..(i + 1) * d].copy_from_slice(&v);
            }
            let n_items_d1 = r.d1.len() / d;
            for i in 0..n_items_d1 {
                let v = rot(&r.d1[i * d..(i + 1) * d]);
                r.d1[i * d..(i + 1) * d].copy_from_slice(&v);
            }
            let n_items_d2 = r.d2.len() / d;
            for i in 0..n_items_d2 {
                let v = rot(&r.d2[i * d..(i + 1) * d]);
                r.d2[i * d..(i + 1) * d].copy_from_slice(&v);
            }
            r
        };
        let c0 = compute_curvature(&Geometry::Chart(base)).unwrap();
        let c1 = compute_curvature(&Geometry::Chart(rotated)).unwrap();
        for s in 0..c0.samples {
            assert!((c0.umbilicity_defect[s] - c1.umbilicity_defect[s]).abs() < 1e-10);
        }
    }

    #[test]
    fn embedded_sphere_keeps_umbilicity() {
        let g = Geometry::Chart(make_sphere_chart(2).unwrap())
            .embed_trailing_zeros(2)
            .unwrap();
        assert_eq!(g.codim(), 3);
        let c = compute_curvature(&g).unwrap();
        assert!(c.max_umbilicity_defect() < 1e-10);
        let check = check_unit_mean_curvature(&c, 1e-10);
        assert!(check.ok);
    }
}
