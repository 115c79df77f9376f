//! Mesh and diagnostics file formats.

use crate::error::CliError;
use hplane_core::math::Vec3;
use hplane_core::mesh::{Topology, TriMesh};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

/// OBJ text: `v`/`f` lines (1-based, counter-clockwise about the mesh normal)
/// and one `# loop k: …` comment per boundary loop (0-based vertex indices).
pub fn obj_string(mesh: &TriMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# topology: {:?}", mesh.topology());
    for p in mesh.vertices() {
        let _ = writeln!(s, "v {} {} {}", p.x, p.y, p.z);
    }
    for t in mesh.triangles() {
        let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    for (k, lp) in mesh.boundary_loops().iter().enumerate() {
        let idx: Vec<String> = lp.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(s, "# loop {k}: {}", idx.join(" "));
    }
    s
}

/// Parse text written by [`obj_string`]. Faces may use `v/vt/vn` references.
pub fn parse_obj(text: &str) -> Result<TriMesh, CliError> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut loops = Vec::new();
    let mut topology = None;
    let bad = |line: usize, msg: &str| CliError::Parse(format!("obj line {}: {msg}", line + 1));
    for (ln, line) in text.lines().enumerate() {
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let c: Vec<f64> = it.map(|x| x.parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad(ln, "bad coordinate"))?;
                if c.len() != 3 {
                    return Err(bad(ln, "vertex needs 3 coordinates"));
                }
                vertices.push(Vec3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let ids: Vec<usize> = it
                    .map(|x| x.split('/').next().unwrap_or("").parse::<usize>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| bad(ln, "bad face index"))?;
                if ids.len() != 3 || ids.iter().any(|&i| i == 0) {
                    return Err(bad(ln, "faces must be 1-based triangles"));
                }
                triangles.push([ids[0] - 1, ids[1] - 1, ids[2] - 1]);
            }
            Some("#") => {
                let rest: Vec<&str> = it.collect();
                match rest.as_slice() {
                    ["topology:", t] => {
                        topology = Some(match *t {
                            "Disk" => Topology::Disk,
                            "Annulus" => Topology::Annulus,
                            "Sphere" => Topology::Sphere,
                            _ => return Err(bad(ln, "unknown topology")),
                        })
                    }
                    ["loop", _, idx @ ..] => {
                        loops.push(idx.iter().map(|x| x.parse::<usize>()).collect::<Result<Vec<_>, _>>().map_err(|_| bad(ln, "bad loop index"))?)
                    }
                    _ => {}
                }
            }
            _ => {}
        }
    }
    let topology = topology.unwrap_or(match loops.len() {
        0 => Topology::Sphere,
        1 => Topology::Disk,
        _ => Topology::Annulus,
    });
    TriMesh::new(vertices, triangles, loops, topology).map_err(|e| CliError::Parse(format!("obj: {e}")))
}

pub fn write_obj(path: &Path, mesh: &TriMesh) -> Result<(), CliError> {
    fs::write(path, obj_string(mesh))?;
    Ok(())
}

/// CSV with a header row.
pub fn csv_string(header: &[&str], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    fs::write(path, csv_string(header, rows)?)?;
    Ok(())
}

/// Format an optional number; empty for missing values.
pub fn num(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}
