//! Plain-text mesh format.
//!
//! ```text
//! # optional comment lines
//! NV NE
//! x_1 y_1
//! ...            (NV vertex lines)
//! m i_1 ... i_m  (NE element lines, 0-based CCW indices)
//! ```

use super::{MeshError, PolygonalMesh};
use crate::geometry::Pt;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

pub fn save_mesh(mesh: &PolygonalMesh, path: &Path) -> Result<(), MeshError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "{} {}", mesh.n_vertices(), mesh.n_elements())?;
    for v in &mesh.vertices {
        // 18 significant digits: round-trips f64 exactly.
        writeln!(w, "{:.17e} {:.17e}", v.x, v.y)?;
    }
    for cycle in &mesh.elements {
        write!(w, "{}", cycle.len())?;
        for &v in cycle {
            write!(w, " {v}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_mesh(path: &Path) -> Result<PolygonalMesh, MeshError> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    // Meaningful lines with their 1-based file line numbers.
    let mut lines: Vec<(usize, String)> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        lines.push((i + 1, t.to_string()));
    }
    let mut it = lines.into_iter();

    let (ln, header) = it.next().ok_or(MeshError::Parse {
        line: 1,
        msg: "missing header line \"NV NE\"".into(),
    })?;
    let counts: Vec<&str> = header.split_ascii_whitespace().collect();
    if counts.len() != 2 {
        return Err(MeshError::Parse {
            line: ln,
            msg: format!("expected \"NV NE\", got {header:?}"),
        });
    }
    let nv: usize = parse_field(counts[0], ln, "vertex count")?;
    let ne: usize = parse_field(counts[1], ln, "element count")?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, line) = it.next().ok_or(MeshError::Parse {
            line: 0,
            msg: format!("file ends before {nv} vertex lines"),
        })?;
        let f: Vec<&str> = line.split_ascii_whitespace().collect();
        if f.len() != 2 {
            return Err(MeshError::Parse {
                line: ln,
                msg: format!("expected \"x y\", got {line:?}"),
            });
        }
        let x: f64 = parse_field(f[0], ln, "x coordinate")?;
        let y: f64 = parse_field(f[1], ln, "y coordinate")?;
        if !x.is_finite() || !y.is_finite() {
            return Err(MeshError::Parse {
                line: ln,
                msg: "non-finite coordinate".into(),
            });
        }
        vertices.push(Pt::new(x, y));
    }

    let mut elements = Vec::with_capacity(ne);
    for _ in 0..ne {
        let (ln, line) = it.next().ok_or(MeshError::Parse {
            line: 0,
            msg: format!("file ends before {ne} element lines"),
        })?;
        let f: Vec<&str> = line.split_ascii_whitespace().collect();
        let m: usize = parse_field(f[0], ln, "element vertex count")?;
        if f.len() != m + 1 {
            return Err(MeshError::Parse {
                line: ln,
                msg: format!("element declares {m} vertices but lists {}", f.len() - 1),
            });
        }
        let mut cycle = Vec::with_capacity(m);
        for s in &f[1..] {
            cycle.push(parse_field(s, ln, "vertex index")?);
        }
        elements.push(cycle);
    }

    if let Some((ln, line)) = it.next() {
        return Err(MeshError::Parse {
            line: ln,
            msg: format!("unexpected trailing content: {line:?}"),
        });
    }

    PolygonalMesh::new(vertices, elements)
}

fn parse_field<T: std::str::FromStr>(s: &str, line: usize, what: &str) -> Result<T, MeshError> {
    s.parse().map_err(|_| MeshError::Parse {
        line,
        msg: format!("cannot parse {what} from {s:?}"),
    })
}
