// quick probe binary
use logsob::geometry::*;
use logsob::geometry::curvature::*;

fn main() {
    for l in 1..=5usize {
        let m = make_icosphere(l).unwrap();
        let g = Geometry::Mesh(m);
        let c = compute_curvature(&g).unwrap();
        let mut worst = (0.0f64, 0usize);
        let mut sum = 0.0f64;
        for s in 0..g.len() {
            let dev = (c.mean_curvature_norm(s) - 1.0).abs();
            sum += dev;
            if dev > worst.0 { worst = (dev, s); }
        }
        let mesh = g.as_mesh().unwrap();
        let val = mesh.one_ring(worst.1).len();
        println!("L={l} verts={} max_dev={:.4e} (valence {val}) mean_dev={:.4e} consistency={:.4e} max_defect={:.4e}",
            g.len(), worst.0, sum / g.len() as f64, c.consistency_error, c.max_umbilicity_defect());
    }
}
