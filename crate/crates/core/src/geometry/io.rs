//! Plain-text geometry exchange format.
//!
//! Layout:
//!
//! ```text
//! geometry dim_n=<n> ambient_dim=<d> kind=<chart|mesh> samples=<count> [faces=<count>]
//! <x_1> ... <x_d> <weight>      (one sample per line)
//! f <i> <j> <k>                 (mesh face index triples)
//! ```
//!
//! Export covers both backends. Import reconstructs meshes only: a chart
//! cannot be rebuilt from sampled positions because the analytic immersion
//! derivatives are not part of the table. Mesh lumped areas are recomputed
//! from the faces on import; the stored weight column is informational.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Geometry, TriangleMeshGeometry};

pub fn export_text(geometry: &Geometry) -> String {
    let d = geometry.ambient_dim();
    let mut out = String::new();
    let kind = match geometry {
        Geometry::Chart(_) => "chart",
        Geometry::Mesh(_) => "mesh",
    };
    write!(
        out,
        "geometry dim_n={} ambient_dim={} kind={} samples={}",
        geometry.dim_n(),
        d,
        kind,
        geometry.len()
    )
    .unwrap();
    if let Geometry::Mesh(m) = geometry {
        write!(out, " faces={}", m.faces.len()).unwrap();
    }
    out.push('\n');
    for i in 0..geometry.len() {
        for v in geometry.position(i) {
            write!(out, "{v:.17e} ").unwrap();
        }
        writeln!(out, "{:.17e}", geometry.weights()[i]).unwrap();
    }
    if let Geometry::Mesh(m) = geometry {
        for f in &m.faces {
            writeln!(out, "f {} {} {}", f[0], f[1], f[2]).unwrap();
        }
    }
    out
}

pub fn export_file(geometry: &Geometry, path: &Path) -> Result<()> {
    std::fs::write(path, export_text(geometry))?;
    Ok(())
}

pub fn import_text(text: &str) -> Result<Geometry> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::GeometryFile("empty file".into()))?;
    let mut dim_n = None;
    let mut ambient = None;
    let mut kind = None;
    let mut samples = None;
    let mut faces_count = 0usize;
    let mut fields = header.split_whitespace();
    if fields.next() != Some("geometry") {
        return Err(Error::GeometryFile("header must start with `geometry`".into()));
    }
    for kv in fields {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::GeometryFile(format!("bad header field `{kv}`")))?;
        match k {
            "dim_n" => dim_n = Some(parse_usize(v)?),
            "ambient_dim" => ambient = Some(parse_usize(v)?),
            "kind" => kind = Some(v.to_string()),
            "samples" => samples = Some(parse_usize(v)?),
            "faces" => faces_count = parse_usize(v)?,
            other => return Err(Error::GeometryFile(format!("unknown header field `{other}`"))),
        }
    }
    let dim_n = dim_n.ok_or_else(|| Error::GeometryFile("missing dim_n".into()))?;
    let ambient = ambient.ok_or_else(|| Error::GeometryFile("missing ambient_dim".into()))?;
    let samples = samples.ok_or_else(|| Error::GeometryFile("missing samples".into()))?;
    match kind.as_deref() {
        Some("mesh") => {}
        Some("chart") => {
            return Err(Error::GeometryFile(
                "charts cannot be reconstructed from a sample table; re-generate them".into(),
            ))
        }
        other => {
            return Err(Error::GeometryFile(format!("unsupported kind {other:?}")));
        }
    }
    if dim_n != 2 {
        return Err(Error::GeometryFile(format!(
            "mesh import supports dim_n=2, got {dim_n}"
        )));
    }

    let mut vertices = Vec::with_capacity(samples * ambient);
    let mut faces: Vec<[usize; 3]> = Vec::with_capacity(faces_count);
    for (lineno, line) in lines {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("f ") {
            let idx: Vec<usize> = rest
                .split_whitespace()
                .map(parse_usize)
                .collect::<Result<_>>()?;
            if idx.len() != 3 {
                return Err(Error::GeometryFile(format!(
                    "line {}: face needs 3 indices",
                    lineno + 1
                )));
            }
            faces.push([idx[0], idx[1], idx[2]]);
        } else {
            let nums: Vec<f64> = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|e| Error::GeometryFile(format!("line {}: {e}", lineno + 1)))
                })
                .collect::<Result<_>>()?;
            if nums.len() != ambient + 1 {
                return Err(Error::GeometryFile(format!(
                    "line {}: expected {} coordinates plus weight",
                    lineno + 1,
                    ambient
                )));
            }
            vertices.extend_from_slice(&nums[..ambient]);
        }
    }
    if vertices.len() != samples * ambient {
        return Err(Error::GeometryFile(format!(
            "sample count mismatch: header says {}, table has {}",
            samples,
            vertices.len() / ambient
        )));
    }
    if faces.len() != faces_count {
        return Err(Error::GeometryFile(format!(
            "face count mismatch: header says {faces_count}, table has {}",
            faces.len()
        )));
    }
    Ok(Geometry::Mesh(TriangleMeshGeometry::new(
        vertices, faces, ambient,
    )?))
}

pub fn import_file(path: &Path) -> Result<Geometry> {
    import_text(&std::fs::read_to_string(path)?)
}

fn parse_usize(s: &str) -> Result<usize> {
    s.parse::<usize>()
        .map_err(|e| Error::GeometryFile(format!("bad integer `{s}`: {e}")))
}
