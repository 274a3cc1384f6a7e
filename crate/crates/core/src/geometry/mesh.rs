//! Triangle mesh carrier for embedded surfaces.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geometry::next_geometry_id;

/// Closed, connected triangle mesh with barycentric lumped vertex areas.
#[derive(Debug, Clone)]
pub struct TriangleMeshGeometry {
    pub(crate) id: u64,
    pub ambient_dim: usize,
    /// Vertex-major ambient coordinates, stride `ambient_dim`.
    pub(crate) vertices: Vec<f64>,
    pub faces: Vec<[usize; 3]>,
    pub(crate) vertex_areas: Vec<f64>,
    /// Mixed Voronoi areas; normalizes pointwise operator values. Barycentric
    /// lumping keeps quadrature simple but is not pointwise consistent at
    /// irregular-valence vertices, where the Voronoi cell is.
    pub(crate) voronoi_areas: Vec<f64>,
    /// Sorted one-ring vertex neighbors.
    pub(crate) one_ring: Vec<Vec<usize>>,
}

impl TriangleMeshGeometry {
    /// Validates closedness (every edge on exactly two faces), connectivity
    /// and non-degeneracy, then builds lumped areas and adjacency.
    pub fn new(vertices: Vec<f64>, faces: Vec<[usize; 3]>, ambient_dim: usize) -> Result<Self> {
        assert!(ambient_dim >= 3, "mesh carrier needs ambient dimension >= 3");
        assert_eq!(vertices.len() % ambient_dim, 0);
        let nv = vertices.len() / ambient_dim;

        let mut edge_count: HashMap<(usize, usize), usize> = HashMap::new();
        for f in &faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                *edge_count.entry(key).or_insert(0) += 1;
            }
        }
        for (&(a, b), &count) in &edge_count {
            if count != 2 {
                return Err(Error::NotClosed(a, b, count));
            }
        }

        let mut mesh = TriangleMeshGeometry {
            id: next_geometry_id(),
            ambient_dim,
            vertices,
            faces,
            vertex_areas: vec![0.0; nv],
            voronoi_areas: vec![0.0; nv],
            one_ring: vec![Vec::new(); nv],
        };

        for (fi, f) in mesh.faces.iter().enumerate().map(|(i, f)| (i, *f)) {
            let area = mesh.face_area(fi);
            if !(area > 1e-14) {
                return Err(Error::DegenerateFace { face: fi, area });
            }
            for &v in &f {
                mesh.vertex_areas[v] += area / 3.0;
            }

            // mixed Voronoi contribution (clipped at obtuse corners)
            let d = mesh.ambient_dim;
            let mut e2 = [0.0_f64; 3];
            for c in 0..3 {
                let a = mesh.position(f[(c + 1) % 3]);
                let b = mesh.position(f[(c + 2) % 3]);
                e2[c] = (0..d).map(|k| (a[k] - b[k]) * (a[k] - b[k])).sum();
            }
            let mut cots = [0.0_f64; 3];
            for c in 0..3 {
                cots[c] = (e2[(c + 1) % 3] + e2[(c + 2) % 3] - e2[c]) / (4.0 * area);
            }
            let obtuse = cots.iter().position(|&c| c < 0.0);
            for c in 0..3 {
                mesh.voronoi_areas[f[c]] += match obtuse {
                    None => {
                        (e2[(c + 1) % 3] * cots[(c + 1) % 3]
                            + e2[(c + 2) % 3] * cots[(c + 2) % 3])
                            / 8.0
                    }
                    Some(o) if o == c => area / 2.0,
                    Some(_) => area / 4.0,
                };
            }
        }

        for f in &mesh.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                if !mesh.one_ring[a].contains(&b) {
                    mesh.one_ring[a].push(b);
                }
                if !mesh.one_ring[b].contains(&a) {
                    mesh.one_ring[b].push(a);
                }
            }
        }
        for ring in &mut mesh.one_ring {
            ring.sort_unstable();
        }

        let components = mesh.component_count();
        if components != 1 {
            return Err(Error::Disconnected { components });
        }
        Ok(mesh)
    }

    fn component_count(&self) -> usize {
        let nv = self.len();
        if nv == 0 {
            return 0;
        }
        let mut seen = vec![false; nv];
        let mut components = 0;
        for start in 0..nv {
            if seen[start] {
                continue;
            }
            components += 1;
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(v) = stack.pop() {
                for &w in &self.one_ring[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
        }
        components
    }

    pub fn len(&self) -> usize {
        self.vertices.len() / self.ambient_dim
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn position(&self, v: usize) -> &[f64] {
        &self.vertices[v * self.ambient_dim..(v + 1) * self.ambient_dim]
    }

    pub fn weights(&self) -> &[f64] {
        &self.vertex_areas
    }

    pub fn voronoi_areas(&self) -> &[f64] {
        &self.voronoi_areas
    }

    pub fn one_ring(&self, v: usize) -> &[usize] {
        &self.one_ring[v]
    }

    /// Vertices within graph distance two, excluding `v` itself.
    pub fn two_ring(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.one_ring[v].clone();
        for &w in &self.one_ring[v] {
            for &z in &self.one_ring[w] {
                if z != v && !out.contains(&z) {
                    out.push(z);
                }
            }
        }
        out.sort_unstable();
        out
    }

    pub fn face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.faces[face];
        let (pa, pb, pc) = (self.position(a), self.position(b), self.position(c));
        let d = self.ambient_dim;
        let mut e1 = vec![0.0; d];
        let mut e2 = vec![0.0; d];
        for k in 0..d {
            e1[k] = pb[k] - pa[k];
            e2[k] = pc[k] - pa[k];
        }
        let (g11, g12, g22) = (dot(&e1, &e1), dot(&e1, &e2), dot(&e2, &e2));
        0.5 * (g11 * g22 - g12 * g12).max(0.0).sqrt()
    }

    pub fn max_edge_length(&self) -> f64 {
        let mut h: f64 = 0.0;
        for f in &self.faces {
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                h = h.max(distance(self.position(a), self.position(b)));
            }
        }
        h
    }

    /// Uniform rescale by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(Error::NonFinite("scale factor"));
        }
        let vertices = self.vertices.iter().map(|v| v * c).collect();
        Self::new(vertices, self.faces.clone(), self.ambient_dim)
    }

    /// Re-embed with `extra` trailing zero ambient coordinates.
    pub fn embed_trailing_zeros(&self, extra: usize) -> Result<Self> {
        let d = self.ambient_dim;
        let nv = self.len();
        let mut vertices = vec![0.0; nv * (d + extra)];
        for v in 0..nv {
            vertices[v * (d + extra)..v * (d + extra) + d].copy_from_slice(self.position(v));
        }
        Self::new(vertices, self.faces.clone(), d + extra)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

/// Icosahedron subdivided `refinement` times, midpoints projected to the unit
/// sphere. Level 4 has 2562 vertices.
pub fn make_icosphere(refinement: usize) -> Result<TriangleMeshGeometry> {
    let (vertices, faces) = icosphere_arrays(refinement);
    TriangleMeshGeometry::new(vertices, faces, 3)
}

pub(crate) fn icosphere_arrays(refinement: usize) -> (Vec<f64>, Vec<[usize; 3]>) {
    let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let raw: [[f64; 3]; 12] = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
    let mut vertices: Vec<f64> = Vec::new();
    for p in raw {
        let norm = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        vertices.extend_from_slice(&[p[0] / norm, p[1] / norm, p[2] / norm]);
    }
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..refinement {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next_faces = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let mut mid = [0usize; 3];
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                mid[k] = *midpoint.entry(key).or_insert_with(|| {
                    let pa = &vertices[a * 3..a * 3 + 3];
                    let pb = &vertices[b * 3..b * 3 + 3];
                    let mut p = [
                        0.5 * (pa[0] + pb[0]),
                        0.5 * (pa[1] + pb[1]),
                        0.5 * (pa[2] + pb[2]),
                    ];
                    let norm = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
                    p.iter_mut().for_each(|x| *x /= norm);
                    vertices.extend_from_slice(&p);
                    vertices.len() / 3 - 1
                });
            }
            next_faces.push([f[0], mid[0], mid[2]]);
            next_faces.push([f[1], mid[1], mid[0]]);
            next_faces.push([f[2], mid[2], mid[1]]);
            next_faces.push([mid[0], mid[1], mid[2]]);
        }
        faces = next_faces;
    }
    (vertices, faces)
}

/// Two disjoint icospheres offset along the first axis. Always fails the
/// connectivity invariant; exists to exercise that rejection path.
pub fn make_disconnected_spheres(refinement: usize) -> Result<TriangleMeshGeometry> {
    let (mut vertices, mut faces) = icosphere_arrays(refinement);
    let (v2, f2) = icosphere_arrays(refinement);
    let offset = vertices.len() / 3;
    for chunk in v2.chunks(3) {
        vertices.extend_from_slice(&[chunk[0] + 4.0, chunk[1], chunk[2]]);
    }
    for f in f2 {
        faces.push([f[0] + offset, f[1] + offset, f[2] + offset]);
    }
    TriangleMeshGeometry::new(vertices, faces, 3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn icosphere_area_within_half_percent_at_level_4() {
        let m = make_icosphere(4).unwrap();
        assert_eq!(m.len(), 2562);
        let total: f64 = m.weights().iter().sum();
        assert!((total - 4.0 * PI).abs() / (4.0 * PI) < 5e-3);
    }

    #[test]
    fn icosphere_area_order_at_least_1p5() {
        let errs: Vec<f64> = (2..5)
            .map(|l| {
                let m = make_icosphere(l).unwrap();
                (m.weights().iter().sum::<f64>() - 4.0 * PI).abs()
            })
            .collect();
        for pair in errs.windows(2) {
            assert!((pair[0] / pair[1]).log2() > 1.5);
        }
    }

    #[test]
    fn disconnected_spheres_are_rejected() {
        match make_disconnected_spheres(1) {
            Err(Error::Disconnected { components }) => assert_eq!(components, 2),
            other => panic!("expected Disconnected, got {other:?}"),
        }
    }

    #[test]
    fn open_mesh_is_rejected() {
        // single triangle: every edge has one face
        let vertices = vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0];
        let err = TriangleMeshGeometry::new(vertices, vec![[0, 1, 2]], 3).unwrap_err();
        assert!(matches!(err, Error::NotClosed(..)));
    }

    #[test]
    fn degenerate_face_is_rejected() {
        // tetrahedron with one vertex collapsed onto an edge midpoint
        let vertices = vec![
            0.0, 0.0, 0.0, //
            1.0, 0.0, 0.0, //
            0.0, 1.0, 0.0, //
            0.5, 0.0, 0.0, // on edge (0,1)
        ];
        let faces = vec![[0, 1, 2], [0, 3, 1], [1, 3, 2], [2, 3, 0]];
        let err = TriangleMeshGeometry::new(vertices, faces, 3).unwrap_err();
        assert!(matches!(err, Error::DegenerateFace { .. }));
    }

    #[test]
    fn voronoi_and_barycentric_areas_tile_the_same_surface() {
        let m = make_icosphere(3).unwrap();
        let bary: f64 = m.weights().iter().sum();
        let voro: f64 = m.voronoi_areas().iter().sum();
        assert!((bary - voro).abs() < 1e-10 * bary);
    }

    #[test]
    fn two_ring_is_larger_than_one_ring() {
        let m = make_icosphere(2).unwrap();
        let r1 = m.one_ring(0).len();
        let r2 = m.two_ring(0).len();
        assert!(r1 >= 5 && r2 > r1);
    }
}
