//! Legacy-VTK snapshot export. Geometry uses the vertex DoFs of the ALE map
//! only, so curved edges are rendered as straight segments; the cell scalars
//! carry the Jacobian-weighted mean of the projected solution.

use anyhow::{Context, Result};
use std::io::Write;
use std::path::Path;
use vem::ale::forms::{map_jacobians, Scratch};
use vem::ale::MapDofs;
use vem::space::VemSpace;

/// Mean of Pi0 rho over each mapped cell, weighted by the Jacobian.
pub fn cell_means(space: &VemSpace, map: &MapDofs, rho: &[f64]) -> Result<Vec<f64>> {
    let mut s = Scratch::new();
    let mut ax = Vec::new();
    let mut ay = Vec::new();
    let mut lrho = Vec::new();
    let mut c0 = Vec::new();
    let mut out = Vec::with_capacity(space.elems.len());
    for (ei, el) in space.elems.iter().enumerate() {
        space.gather(ei, &map.x, &mut ax);
        space.gather(ei, &map.y, &mut ay);
        space.gather(ei, rho, &mut lrho);
        map_jacobians(el, ei, 0.0, &ax, &ay, &mut s)?;
        c0.resize(el.n_k, 0.0);
        el.pi0.matvec(&lrho, &mut c0);
        let mut num = 0.0;
        let mut den = 0.0;
        for (q, (&w, &j)) in el.quad_wts.iter().zip(&s.jdet).enumerate() {
            let row = &el.mono_vals[q * el.n_k..(q + 1) * el.n_k];
            let val: f64 = c0.iter().zip(row).map(|(c, m)| c * m).sum();
            num += w * j * val;
            den += w * j;
        }
        out.push(num / den);
    }
    Ok(out)
}

pub fn export_snapshot(space: &VemSpace, map: &MapDofs, rho: &[f64], path: &Path) -> Result<()> {
    let mesh = &space.mesh;
    let nv = mesh.n_vertices();
    let ne = mesh.n_elements();
    let means = cell_means(space, map, rho)?;

    let file = std::fs::File::create(path)
        .with_context(|| format!("creating snapshot {}", path.display()))?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "ale vem snapshot")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;

    writeln!(w, "POINTS {nv} double")?;
    for v in 0..nv {
        let p = map.point(v);
        writeln!(w, "{:e} {:e} 0.0", p.x, p.y)?;
    }

    let list_len: usize = mesh.elements.iter().map(|c| c.len() + 1).sum();
    writeln!(w, "CELLS {ne} {list_len}")?;
    for cycle in &mesh.elements {
        write!(w, "{}", cycle.len())?;
        for &v in cycle {
            write!(w, " {v}")?;
        }
        writeln!(w)?;
    }
    writeln!(w, "CELL_TYPES {ne}")?;
    for _ in 0..ne {
        writeln!(w, "7")?;
    }

    writeln!(w, "POINT_DATA {nv}")?;
    writeln!(w, "SCALARS rho double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for v in 0..nv {
        writeln!(w, "{:e}", rho[v])?;
    }

    writeln!(w, "CELL_DATA {ne}")?;
    writeln!(w, "SCALARS rho_mean double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for m in &means {
        writeln!(w, "{m:e}")?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use vem::mesh::voronoi::generate_cvt;

    fn space(cells: usize, k: usize) -> VemSpace {
        VemSpace::new(generate_cvt(cells, 40, 3).unwrap(), k).unwrap()
    }

    /// Minimal legacy-VTK reader used as the round-trip oracle.
    fn parse_vtk(text: &str) -> (Vec<(f64, f64)>, usize, Vec<f64>, Vec<f64>) {
        let mut lines = text.lines().peekable();
        let mut points = Vec::new();
        let mut n_cells = 0;
        let mut point_data = Vec::new();
        let mut cell_data = Vec::new();
        while let Some(line) = lines.next() {
            let mut words = line.split_whitespace();
            match words.next() {
                Some("POINTS") => {
                    let n: usize = words.next().unwrap().parse().unwrap();
                    for _ in 0..n {
                        let row = lines.next().unwrap();
                        let mut it = row.split_whitespace().map(|v| v.parse::<f64>().unwrap());
                        points.push((it.next().unwrap(), it.next().unwrap()));
                    }
                }
                Some("CELLS") => {
                    n_cells = words.next().unwrap().parse().unwrap();
                    let mut listed = 0usize;
                    for _ in 0..n_cells {
                        let row = lines.next().unwrap();
                        let mut it = row.split_whitespace().map(|v| v.parse::<usize>().unwrap());
                        let m = it.next().unwrap();
                        assert_eq!(it.count(), m);
                        listed += m + 1;
                    }
                    let total: usize = line.split_whitespace().nth(2).unwrap().parse().unwrap();
                    assert_eq!(listed, total);
                }
                Some("POINT_DATA") | Some("CELL_DATA") => {
                    let n: usize = words.next().unwrap().parse().unwrap();
                    assert!(lines.next().unwrap().starts_with("SCALARS"));
                    assert!(lines.next().unwrap().starts_with("LOOKUP_TABLE"));
                    let dst = if line.starts_with("POINT_DATA") {
                        &mut point_data
                    } else {
                        &mut cell_data
                    };
                    for _ in 0..n {
                        dst.push(lines.next().unwrap().trim().parse::<f64>().unwrap());
                    }
                }
                _ => {}
            }
        }
        (points, n_cells, point_data, cell_data)
    }

    #[test]
    fn identity_map_constant_one_round_trips() {
        let sp = space(24, 2);
        let map = MapDofs::identity(&sp);
        let rho = vec![1.0; sp.n_dofs()];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snap.vtk");
        export_snapshot(&sp, &map, &rho, &path).unwrap();

        let text = std::fs::read_to_string(&path).unwrap();
        let (points, n_cells, pd, cd) = parse_vtk(&text);
        assert_eq!(points.len(), sp.mesh.n_vertices());
        assert_eq!(n_cells, sp.mesh.n_elements());
        for (i, &(x, y)) in points.iter().enumerate() {
            let v = sp.mesh.vertices[i];
            assert!((x - v.x).abs() < 1e-12 && (y - v.y).abs() < 1e-12);
        }
        for v in pd {
            assert!((v - 1.0).abs() < 1e-12);
        }
        for v in cd {
            assert!((v - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn oscillating_map_moves_the_point_extents() {
        use vem::ale::{maps, Motion};
        let sp = space(30, 2);
        let t = 0.025;
        let map_fn = match maps::oscillating(0.1, 20.0) {
            Motion::Analytic { map, .. } => map,
            _ => unreachable!(),
        };
        let map = MapDofs::interpolate(&sp, |p| map_fn(p, t));
        let rho = sp.interpolate(|p| p.x);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("osc.vtk");
        export_snapshot(&sp, &map, &rho, &path).unwrap();

        let (points, _, _, _) = parse_vtk(&std::fs::read_to_string(&path).unwrap());
        let s = 0.1 * (std::f64::consts::PI * 20.0 * t).sin();
        let (mut xmin, mut xmax) = (f64::MAX, f64::MIN);
        let (mut ymin, mut ymax) = (f64::MAX, f64::MIN);
        for &(x, y) in &points {
            xmin = xmin.min(x);
            xmax = xmax.max(x);
            ymin = ymin.min(y);
            ymax = ymax.max(y);
        }
        assert!((xmin - 0.0).abs() < 1e-12 && (xmax - 2.0).abs() < 1e-12);
        assert!((ymin - s).abs() < 1e-12 && (ymax - (1.0 + s)).abs() < 1e-12);
    }
}
