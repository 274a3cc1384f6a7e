use logsob::geometry::*;

fn mixed_voronoi(mesh: &TriangleMeshGeometry) -> Vec<f64> {
    let d = mesh.ambient_dim;
    let nv = mesh.len();
    let mut areas = vec![0.0; nv];
    for (fi, f) in mesh.faces.iter().enumerate() {
        let p: Vec<&[f64]> = f.iter().map(|&v| mesh.position(v)).collect();
        // squared edge lengths opposite each corner
        let mut e2 = [0.0f64; 3];
        for c in 0..3 {
            let (a, b) = (p[(c + 1) % 3], p[(c + 2) % 3]);
            e2[c] = (0..d).map(|k| (a[k] - b[k]) * (a[k] - b[k])).sum();
        }
        let area = mesh.face_area(fi);
        // cotangents at each corner
        let mut cots = [0.0f64; 3];
        for c in 0..3 {
            // cot at corner c: (e2[(c+1)%3] + e2[(c+2)%3] - e2[c]) / (8*area)... wait
            // law of cosines: cos at c relates to edges; cot = (b^2 + c^2 - a^2)/(4*area)
            cots[c] = (e2[(c + 1) % 3] + e2[(c + 2) % 3] - e2[c]) / (4.0 * area);
        }
        let obtuse = cots.iter().position(|&c| c < 0.0);
        for c in 0..3 {
            let v = f[c];
            match obtuse {
                None => {
                    areas[v] += (e2[(c + 1) % 3] * cots[(c + 1) % 3]
                        + e2[(c + 2) % 3] * cots[(c + 2) % 3]) / 8.0;
                }
                Some(o) if o == c => areas[v] += area / 2.0,
                Some(_) => areas[v] += area / 4.0,
            }
        }
    }
    areas
}

fn main() {
    for l in 1..=5usize {
        let mesh = make_icosphere(l).unwrap();
        let areas = mixed_voronoi(&mesh);
        let g = Geometry::Mesh(mesh);
        let one = logsob::field::ScalarField::constant(&g, 1.0);
        let lap = logsob::operator::build_weighted_laplacian(&one, &g).unwrap();
        let mesh = g.as_mesh().unwrap();
        let mut hnorm = vec![0.0f64; g.len()];
        for k in 0..3 {
            let coord: Vec<f64> = (0..g.len()).map(|i| g.position(i)[k]).collect();
            let lx = lap.apply(&coord);
            for i in 0..g.len() {
                let h = lx[i] / (2.0 * areas[i]);
                hnorm[i] += h * h;
            }
        }
        let mut worst = (0.0f64, 0usize);
        for i in 0..g.len() {
            let dev = (hnorm[i].sqrt() - 1.0).abs();
            if dev > worst.0 { worst = (dev, i); }
        }
        let bary_total: f64 = g.weights().iter().sum();
        let vor_total: f64 = areas.iter().sum();
        println!("L={l} max|H|-1 dev={:.4e} (valence {}) bary_area={:.6} voronoi_area={:.6}",
            worst.0, mesh.one_ring(worst.1).len(), bary_total, vor_total);
    }
}
