//! Parametric chart carriers: structured grids with analytic immersion derivatives.
//!
//! A chart holds samples of an immersion `X: (w0, w1) -> R^{n+m}` together with
//! its first and second partial derivatives at every node, the induced metric,
//! and midpoint-rule quadrature weights. Periodic axes wrap; non-periodic axes
//! are sampled at cell midpoints so that a coordinate singularity at the axis
//! endpoints (the lat-long poles) never coincides with a node.

use crate::error::{Error, Result};
use crate::geometry::next_geometry_id;

/// Immersion with analytic derivatives, evaluated at chart parameters.
pub trait Immersion {
    fn ambient_dim(&self) -> usize;
    fn position(&self, w: [f64; 2], out: &mut [f64]);
    /// First partial along `axis`.
    fn d1(&self, w: [f64; 2], axis: usize, out: &mut [f64]);
    /// Second partial along `(a, b)`.
    fn d2(&self, w: [f64; 2], a: usize, b: usize, out: &mut [f64]);
}

/// Structured-grid sampling of an immersed n-manifold, n = 1 or 2.
#[derive(Debug, Clone)]
pub struct ChartGeometry {
    pub(crate) id: u64,
    pub dim_n: usize,
    pub ambient_dim: usize,
    /// Nodes per axis; `grid_shape[1] == 1` for curves.
    pub grid_shape: [usize; 2],
    pub periodic: [bool; 2],
    pub(crate) spacing: [f64; 2],
    pub(crate) origin: [f64; 2],
    /// Node-major ambient coordinates, stride `ambient_dim`.
    pub(crate) positions: Vec<f64>,
    /// First partials: node-major, then axis, stride `ambient_dim`.
    pub(crate) d1: Vec<f64>,
    /// Second partials: node-major, then symmetric pair (00, 01, 11), stride `ambient_dim`.
    pub(crate) d2: Vec<f64>,
    /// Metric components per node: `[g00]` for curves, `[g00, g01, g11]` for surfaces.
    pub(crate) metric: Vec<f64>,
    pub(crate) sqrt_g: Vec<f64>,
    pub(crate) weights: Vec<f64>,
}

impl ChartGeometry {
    /// Sample `imm` on a grid. `extent` is the parameter length per axis;
    /// non-periodic axes are shifted by half a cell.
    pub fn from_immersion(
        imm: &dyn Immersion,
        dim_n: usize,
        grid_shape: [usize; 2],
        periodic: [bool; 2],
        extent: [f64; 2],
    ) -> Result<Self> {
        if dim_n == 0 || dim_n > 2 {
            return Err(Error::UnsupportedDimension(dim_n));
        }
        let ambient = imm.ambient_dim();
        let (n0, n1) = (grid_shape[0], grid_shape[1]);
        let nodes = n0 * n1;
        let mut spacing = [0.0; 2];
        let mut origin = [0.0; 2];
        for a in 0..dim_n {
            spacing[a] = extent[a] / grid_shape[a] as f64;
            origin[a] = if periodic[a] { 0.0 } else { 0.5 * spacing[a] };
        }

        let npairs = dim_n * (dim_n + 1) / 2;
        let mut positions = vec![0.0; nodes * ambient];
        let mut d1 = vec![0.0; nodes * dim_n * ambient];
        let mut d2 = vec![0.0; nodes * npairs * ambient];

        for i0 in 0..n0 {
            for i1 in 0..n1 {
                let node = i0 * n1 + i1;
                let w = [
                    origin[0] + i0 as f64 * spacing[0],
                    origin[1] + i1 as f64 * spacing[1],
                ];
                imm.position(w, &mut positions[node * ambient..(node + 1) * ambient]);
                for a in 0..dim_n {
                    let off = (node * dim_n + a) * ambient;
                    imm.d1(w, a, &mut d1[off..off + ambient]);
                }
                for (p, &(a, b)) in sym_pairs(dim_n).iter().enumerate() {
                    let off = (node * npairs + p) * ambient;
                    imm.d2(w, a, b, &mut d2[off..off + ambient]);
                }
            }
        }

        let mut chart = ChartGeometry {
            id: next_geometry_id(),
            dim_n,
            ambient_dim: ambient,
            grid_shape,
            periodic,
            spacing,
            origin,
            positions,
            d1,
            d2,
            metric: Vec::new(),
            sqrt_g: Vec::new(),
            weights: Vec::new(),
        };
        chart.rebuild_metric()?;
        Ok(chart)
    }

    fn rebuild_metric(&mut self) -> Result<()> {
        let nodes = self.len();
        let ncomp = if self.dim_n == 1 { 1 } else { 3 };
        self.metric = vec![0.0; nodes * ncomp];
        self.sqrt_g = vec![0.0; nodes];
        self.weights = vec![0.0; nodes];
        let cell = self.spacing[..self.dim_n].iter().product::<f64>();
        for node in 0..nodes {
            let det = if self.dim_n == 1 {
                let t = self.d1_at(node, 0);
                let g00 = dot(t, t);
                self.metric[node] = g00;
                g00
            } else {
                let t0 = self.d1_at(node, 0);
                let t1 = self.d1_at(node, 1);
                let (g00, g01, g11) = (dot(t0, t0), dot(t0, t1), dot(t1, t1));
                self.metric[node * 3] = g00;
                self.metric[node * 3 + 1] = g01;
                self.metric[node * 3 + 2] = g11;
                g00 * g11 - g01 * g01
            };
            if !(det > 0.0) || !det.is_finite() {
                return Err(Error::NonImmersion { sample: node, det });
            }
            self.sqrt_g[node] = det.sqrt();
            self.weights[node] = self.sqrt_g[node] * cell;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.grid_shape[0] * self.grid_shape[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn position(&self, node: usize) -> &[f64] {
        &self.positions[node * self.ambient_dim..(node + 1) * self.ambient_dim]
    }

    pub fn weight(&self, node: usize) -> f64 {
        self.weights[node]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn sqrt_g(&self, node: usize) -> f64 {
        self.sqrt_g[node]
    }

    /// Chart parameter of a node.
    pub fn param(&self, node: usize) -> [f64; 2] {
        let (i0, i1) = (node / self.grid_shape[1], node % self.grid_shape[1]);
        [
            self.origin[0] + i0 as f64 * self.spacing[0],
            self.origin[1] + i1 as f64 * self.spacing[1],
        ]
    }

    pub fn spacing(&self) -> [f64; 2] {
        self.spacing
    }

    pub fn d1_at(&self, node: usize, axis: usize) -> &[f64] {
        let off = (node * self.dim_n + axis) * self.ambient_dim;
        &self.d1[off..off + self.ambient_dim]
    }

    pub fn d2_at(&self, node: usize, a: usize, b: usize) -> &[f64] {
        let p = pair_index(self.dim_n, a, b);
        let npairs = self.dim_n * (self.dim_n + 1) / 2;
        let off = (node * npairs + p) * self.ambient_dim;
        &self.d2[off..off + self.ambient_dim]
    }

    /// Metric components at a node: `[g00]` or `[g00, g01, g11]`.
    pub fn metric_at(&self, node: usize) -> &[f64] {
        let ncomp = if self.dim_n == 1 { 1 } else { 3 };
        &self.metric[node * ncomp..(node + 1) * ncomp]
    }

    /// Inverse metric as `[g^00]` or `[g^00, g^01, g^11]`.
    pub fn inv_metric_at(&self, node: usize) -> [f64; 3] {
        if self.dim_n == 1 {
            [1.0 / self.metric[node], 0.0, 0.0]
        } else {
            let m = self.metric_at(node);
            let det = m[0] * m[2] - m[1] * m[1];
            [m[2] / det, -m[1] / det, m[0] / det]
        }
    }

    /// Neighbor of `node` one step along `axis` in direction `dir` (+1/-1).
    /// Returns `None` past a non-periodic boundary.
    pub fn neighbor(&self, node: usize, axis: usize, dir: isize) -> Option<usize> {
        let (i0, i1) = (node / self.grid_shape[1], node % self.grid_shape[1]);
        let mut idx = [i0 as isize, i1 as isize];
        idx[axis] += dir;
        let n = self.grid_shape[axis] as isize;
        if idx[axis] < 0 || idx[axis] >= n {
            if self.periodic[axis] {
                idx[axis] = idx[axis].rem_euclid(n);
            } else {
                return None;
            }
        }
        Some(idx[0] as usize * self.grid_shape[1] + idx[1] as usize)
    }

    /// Largest node spacing in ambient length units.
    pub fn max_spacing(&self) -> f64 {
        let mut h: f64 = 0.0;
        for node in 0..self.len() {
            for a in 0..self.dim_n {
                let t = self.d1_at(node, a);
                h = h.max(self.spacing[a] * dot(t, t).sqrt());
            }
        }
        h
    }

    /// Uniform rescale of the immersion by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::NonFinite("scale factor"));
        }
        let mut out = self.clone();
        out.id = next_geometry_id();
        for v in out.positions.iter_mut().chain(out.d1.iter_mut()).chain(out.d2.iter_mut()) {
            *v *= c;
        }
        out.rebuild_metric()?;
        Ok(out)
    }

    /// Re-embed with `extra` trailing zero ambient coordinates.
    pub fn embed_trailing_zeros(&self, extra: usize) -> Self {
        let mut out = self.clone();
        out.id = next_geometry_id();
        out.ambient_dim = self.ambient_dim + extra;
        out.positions = pad_stride(&self.positions, self.ambient_dim, extra);
        out.d1 = pad_stride(&self.d1, self.ambient_dim, extra);
        out.d2 = pad_stride(&self.d2, self.ambient_dim, extra);
        out
    }
}

fn pad_stride(data: &[f64], stride: usize, extra: usize) -> Vec<f64> {
    let rows = data.len() / stride;
    let mut out = vec![0.0; rows * (stride + extra)];
    for r in 0..rows {
        out[r * (stride + extra)..r * (stride + extra) + stride]
            .copy_from_slice(&data[r * stride..(r + 1) * stride]);
    }
    out
}

pub(crate) fn sym_pairs(dim_n: usize) -> &'static [(usize, usize)] {
    match dim_n {
        1 => &[(0, 0)],
        _ => &[(0, 0), (0, 1), (1, 1)],
    }
}

pub(crate) fn pair_index(dim_n: usize, a: usize, b: usize) -> usize {
    let (a, b) = (a.min(b), a.max(b));
    match (dim_n, a, b) {
        (1, 0, 0) => 0,
        (_, 0, 0) => 0,
        (_, 0, 1) => 1,
        (_, 1, 1) => 2,
        _ => unreachable!("bad pair ({a},{b}) for dim {dim_n}"),
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

// ---------------------------------------------------------------------------
// Built-in immersions
// ---------------------------------------------------------------------------

/// Unit circle in R^2, arc-length parameter.
struct Circle;

impl Immersion for Circle {
    fn ambient_dim(&self) -> usize {
        2
    }
    fn position(&self, w: [f64; 2], out: &mut [f64]) {
        out[0] = w[0].cos();
        out[1] = w[0].sin();
    }
    fn d1(&self, w: [f64; 2], _axis: usize, out: &mut [f64]) {
        out[0] = -w[0].sin();
        out[1] = w[0].cos();
    }
    fn d2(&self, w: [f64; 2], _a: usize, _b: usize, out: &mut [f64]) {
        out[0] = -w[0].cos();
        out[1] = -w[0].sin();
    }
}

/// (theta, phi) -> (cos t, sin t, cos p, sin p)/sqrt(2); minimal in S^3, |H| = 1 in R^4.
struct CliffordTorus;

impl Immersion for CliffordTorus {
    fn ambient_dim(&self) -> usize {
        4
    }
    fn position(&self, w: [f64; 2], out: &mut [f64]) {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        out[0] = s * w[0].cos();
        out[1] = s * w[0].sin();
        out[2] = s * w[1].cos();
        out[3] = s * w[1].sin();
    }
    fn d1(&self, w: [f64; 2], axis: usize, out: &mut [f64]) {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        out.fill(0.0);
        let k = 2 * axis;
        out[k] = -s * w[axis].sin();
        out[k + 1] = s * w[axis].cos();
    }
    fn d2(&self, w: [f64; 2], a: usize, b: usize, out: &mut [f64]) {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        out.fill(0.0);
        if a == b {
            let k = 2 * a;
            out[k] = -s * w[a].cos();
            out[k + 1] = -s * w[a].sin();
        }
    }
}

/// Lat-long chart of the unit sphere: (theta, phi) -> (sin t cos p, sin t sin p, cos t).
struct SphereChart;

impl Immersion for SphereChart {
    fn ambient_dim(&self) -> usize {
        3
    }
    fn position(&self, w: [f64; 2], out: &mut [f64]) {
        let (st, ct) = w[0].sin_cos();
        let (sp, cp) = w[1].sin_cos();
        out[0] = st * cp;
        out[1] = st * sp;
        out[2] = ct;
    }
    fn d1(&self, w: [f64; 2], axis: usize, out: &mut [f64]) {
        let (st, ct) = w[0].sin_cos();
        let (sp, cp) = w[1].sin_cos();
        if axis == 0 {
            out[0] = ct * cp;
            out[1] = ct * sp;
            out[2] = -st;
        } else {
            out[0] = -st * sp;
            out[1] = st * cp;
            out[2] = 0.0;
        }
    }
    fn d2(&self, w: [f64; 2], a: usize, b: usize, out: &mut [f64]) {
        let (st, ct) = w[0].sin_cos();
        let (sp, cp) = w[1].sin_cos();
        match (a.min(b), a.max(b)) {
            (0, 0) => {
                out[0] = -st * cp;
                out[1] = -st * sp;
                out[2] = -ct;
            }
            (0, 1) => {
                out[0] = -ct * sp;
                out[1] = ct * cp;
                out[2] = 0.0;
            }
            _ => {
                out[0] = -st * cp;
                out[1] = -st * sp;
                out[2] = 0.0;
            }
        }
    }
}

use std::f64::consts::PI;

/// Uniform polygonal circle: `nodes` samples of the unit circle.
pub fn make_circle(nodes: usize) -> Result<ChartGeometry> {
    if nodes < 8 {
        return Err(Error::GridTooSmall { got: nodes, min: 8 });
    }
    ChartGeometry::from_immersion(&Circle, 1, [nodes, 1], [true, false], [2.0 * PI, 0.0])
}

/// Flat torus in R^4 with unit mean curvature, `grid` samples per periodic axis.
pub fn make_clifford_torus(grid: usize) -> Result<ChartGeometry> {
    if grid < 8 {
        return Err(Error::GridTooSmall { got: grid, min: 8 });
    }
    ChartGeometry::from_immersion(
        &CliffordTorus,
        2,
        [grid, grid],
        [true, true],
        [2.0 * PI, 2.0 * PI],
    )
}

/// Lat-long chart of S^2 at `refinement` level; theta rows sit at cell
/// midpoints so the poles are never sampled.
pub fn make_sphere_chart(refinement: usize) -> Result<ChartGeometry> {
    let n_theta = 8 << refinement;
    let n_phi = 2 * n_theta;
    ChartGeometry::from_immersion(
        &SphereChart,
        2,
        [n_theta, n_phi],
        [false, true],
        [PI, 2.0 * PI],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn circle_length_is_exact() {
        let c = make_circle(256).unwrap();
        let total: f64 = c.weights().iter().sum();
        assert_relative_eq!(total, 2.0 * PI, max_relative = 1e-12);
    }

    #[test]
    fn circle_rejects_tiny_grid() {
        assert!(matches!(make_circle(4), Err(Error::GridTooSmall { .. })));
    }

    #[test]
    fn torus_area_converges_to_2pi2() {
        // product of two circle lengths pi*sqrt(2) each
        for grid in [16, 64] {
            let t = make_clifford_torus(grid).unwrap();
            let total: f64 = t.weights().iter().sum();
            assert_relative_eq!(total, 2.0 * PI * PI, max_relative = 1e-12);
        }
    }

    #[test]
    fn torus_rejects_tiny_grid() {
        assert!(matches!(make_clifford_torus(4), Err(Error::GridTooSmall { .. })));
    }

    #[test]
    fn sphere_chart_area_second_order() {
        let errs: Vec<f64> = [2usize, 3, 4]
            .iter()
            .map(|&l| {
                let s = make_sphere_chart(l).unwrap();
                let total: f64 = s.weights().iter().sum();
                (total - 4.0 * PI).abs()
            })
            .collect();
        for pair in errs.windows(2) {
            let order = (pair[0] / pair[1]).log2();
            assert!(order > 1.5, "observed order {order}");
        }
    }

    #[test]
    fn periodic_neighbor_wraps() {
        let c = make_circle(16).unwrap();
        assert_eq!(c.neighbor(15, 0, 1), Some(0));
        assert_eq!(c.neighbor(0, 0, -1), Some(15));
        let s = make_sphere_chart(1).unwrap();
        // theta axis is open, phi axis wraps
        assert_eq!(s.neighbor(0, 0, -1), None);
        assert_eq!(s.neighbor(0, 1, -1), Some(s.grid_shape[1] - 1));
    }

    #[test]
    fn scaled_chart_scales_weights_by_c_pow_n() {
        let t = make_clifford_torus(16).unwrap();
        let t2 = t.scaled(2.0).unwrap();
        let a1: f64 = t.weights().iter().sum();
        let a2: f64 = t2.weights().iter().sum();
        assert_relative_eq!(a2, 4.0 * a1, max_relative = 1e-12);
    }

    #[test]
    fn trailing_zero_embedding_preserves_weights() {
        let c = make_circle(32).unwrap();
        let e = c.embed_trailing_zeros(2);
        assert_eq!(e.ambient_dim, 4);
        assert_eq!(e.position(5)[2], 0.0);
        assert_eq!(e.position(5)[3], 0.0);
        assert_relative_eq!(
            e.weights().iter().sum::<f64>(),
            c.weights().iter().sum::<f64>(),
            max_relative = 1e-14
        );
    }
}
