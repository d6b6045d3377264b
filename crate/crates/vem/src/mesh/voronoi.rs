//! Seeded centroidal Voronoi tessellation of the unit square or a disk.
//!
//! Cells are built by half-plane clipping against bisectors of nearby seeds,
//! found through a uniform grid with an early-exit ring search. Disk meshes
//! use radially mirrored ghost seeds, so boundary cells are cut by tangent
//! lines; their outer vertices are snapped onto the circle afterwards.

use super::{MeshError, PolygonalMesh};
use crate::geometry::{polygon_centroid, Pt};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

#[derive(Debug, Clone, Copy)]
pub enum ClipDomain {
    UnitSquare,
    Disk { radius: f64 },
}

/// CVT mesh of the unit square with `n_seeds` cells.
pub fn generate_cvt(
    n_seeds: usize,
    lloyd_iterations: usize,
    rng_seed: u64,
) -> Result<PolygonalMesh, MeshError> {
    if n_seeds == 0 {
        return Err(MeshError::Generation("n_seeds must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let seeds: Vec<Pt> = (0..n_seeds)
        .map(|_| Pt::new(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)))
        .collect();
    generate_cvt_from_seeds(seeds, lloyd_iterations, ClipDomain::UnitSquare)
}

/// CVT mesh of the disk of given radius centred at the origin. Boundary
/// vertices lie exactly on the circle; the mesh tiles the inscribed polygon.
pub fn generate_cvt_disk(
    n_seeds: usize,
    lloyd_iterations: usize,
    rng_seed: u64,
    radius: f64,
) -> Result<PolygonalMesh, MeshError> {
    if n_seeds < 16 {
        return Err(MeshError::Generation(
            "disk meshes need at least 16 seeds".into(),
        ));
    }
    if !(radius > 0.0) {
        return Err(MeshError::Generation("radius must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let seeds: Vec<Pt> = (0..n_seeds)
        .map(|_| {
            // Uniform in the disk of radius 0.9 R; staying clear of the
            // boundary keeps the initial ghost mirrors well separated.
            let r = 0.9 * radius * rng.random_range(0.0f64..1.0).sqrt();
            let t = rng.random_range(0.0..std::f64::consts::TAU);
            Pt::new(r * t.cos(), r * t.sin())
        })
        .collect();
    generate_cvt_from_seeds(seeds, lloyd_iterations, ClipDomain::Disk { radius })
}

pub fn generate_cvt_from_seeds(
    mut seeds: Vec<Pt>,
    lloyd_iterations: usize,
    domain: ClipDomain,
) -> Result<PolygonalMesh, MeshError> {
    for _ in 0..lloyd_iterations {
        lloyd_iterate(&mut seeds, domain)?;
    }
    let cells = voronoi_cells(&seeds, domain)?;
    let mesh = mesh_from_cells(&cells)?;
    match domain {
        ClipDomain::UnitSquare => Ok(mesh),
        ClipDomain::Disk { radius } => snap_boundary_to_circle(mesh, radius),
    }
}

/// One Lloyd step: moves every seed to the centroid of its Voronoi cell.
/// Returns the CVT energy of the configuration before the move.
pub fn lloyd_iterate(seeds: &mut [Pt], domain: ClipDomain) -> Result<f64, MeshError> {
    let cells = voronoi_cells(seeds, domain)?;
    let mut energy = 0.0;
    for (s, cell) in seeds.iter().zip(&cells) {
        energy += cell_energy(cell, *s);
    }
    for (s, cell) in seeds.iter_mut().zip(&cells) {
        *s = polygon_centroid(cell);
    }
    Ok(energy)
}

/// ∫_cell |x - s|^2 dx by the edge-midpoint rule, exact for quadratics.
fn cell_energy(cell: &[Pt], s: Pt) -> f64 {
    let mut e = 0.0;
    for i in 1..cell.len() - 1 {
        let (a, b, c) = (cell[0], cell[i], cell[i + 1]);
        let area = 0.5 * (b - a).cross(c - a);
        let m1 = (a + b) * 0.5;
        let m2 = (b + c) * 0.5;
        let m3 = (c + a) * 0.5;
        e += area / 3.0 * ((m1 - s).norm_sq() + (m2 - s).norm_sq() + (m3 - s).norm_sq());
    }
    e
}

fn start_polygon(domain: ClipDomain) -> Vec<Pt> {
    match domain {
        ClipDomain::UnitSquare => vec![
            Pt::new(0.0, 0.0),
            Pt::new(1.0, 0.0),
            Pt::new(1.0, 1.0),
            Pt::new(0.0, 1.0),
        ],
        ClipDomain::Disk { radius } => {
            // Generous 16-gon around the disk; ghost tangent planes trim it.
            let r = 1.25 * radius;
            (0..16)
                .map(|i| {
                    let t = std::f64::consts::TAU * i as f64 / 16.0;
                    Pt::new(r * t.cos(), r * t.sin())
                })
                .collect()
        }
    }
}

fn voronoi_cells(seeds: &[Pt], domain: ClipDomain) -> Result<Vec<Vec<Pt>>, MeshError> {
    let n = seeds.len();
    let mut points: Vec<Pt> = seeds.to_vec();
    if let ClipDomain::Disk { radius } = domain {
        for s in seeds {
            let r = s.norm();
            if r > 1e-9 * radius {
                // Radial mirror across the circle: |ghost| = 2R - |s|.
                points.push(*s * (2.0 * radius / r - 1.0));
            }
        }
    }
    let grid = SeedGrid::build(points);
    let start = start_polygon(domain);

    let mut cells = Vec::with_capacity(n);
    let mut poly: Vec<Pt> = Vec::with_capacity(32);
    let mut scratch: Vec<Pt> = Vec::with_capacity(32);
    let mut ring: Vec<(f64, u32)> = Vec::new();
    for (i, &s) in seeds.iter().enumerate() {
        poly.clear();
        poly.extend_from_slice(&start);
        let mut max_d2 = poly
            .iter()
            .map(|v| (*v - s).norm_sq())
            .fold(0.0, f64::max);
        let (bi, bj) = grid.bucket_of(s);
        for r in 0..=grid.nb {
            // Any seed in ring r is at least (r-1) buckets away; once that
            // exceeds twice the farthest cell vertex no bisector can cut.
            if r >= 2 {
                let ring_min = (r - 1) as f64 * grid.hb;
                if ring_min * ring_min > 4.0 * max_d2 {
                    break;
                }
            }
            grid.ring_candidates(bi, bj, r, s, &mut ring);
            ring.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            for &(d2, ci) in &ring {
                if ci as usize == i {
                    continue;
                }
                if d2 > 4.0 * max_d2 {
                    break;
                }
                if d2 < 1e-28 {
                    return Err(MeshError::Generation(format!(
                        "seeds {} and {} coincide",
                        i, ci
                    )));
                }
                let c = grid.points[ci as usize];
                clip_halfplane(&mut poly, &mut scratch, (s + c) * 0.5, c - s);
                if poly.len() < 3 {
                    return Err(MeshError::Generation(format!(
                        "seed {i} has an empty Voronoi cell; try more Lloyd iterations \
                         or a different rng seed"
                    )));
                }
                max_d2 = poly
                    .iter()
                    .map(|v| (*v - s).norm_sq())
                    .fold(0.0, f64::max);
            }
        }
        cells.push(poly.clone());
    }
    Ok(cells)
}

/// Keeps the part of `poly` with (x - mid) . n <= 0. CCW order is preserved.
fn clip_halfplane(poly: &mut Vec<Pt>, scratch: &mut Vec<Pt>, mid: Pt, n: Pt) {
    scratch.clear();
    let m = poly.len();
    for i in 0..m {
        let a = poly[i];
        let b = poly[(i + 1) % m];
        let da = (a - mid).dot(n);
        let db = (b - mid).dot(n);
        if da <= 0.0 {
            scratch.push(a);
            if db > 0.0 {
                let t = da / (da - db);
                scratch.push(a + (b - a) * t);
            }
        } else if db <= 0.0 {
            let t = da / (da - db);
            scratch.push(a + (b - a) * t);
        }
    }
    std::mem::swap(poly, scratch);
}

struct SeedGrid {
    x0: f64,
    y0: f64,
    /// Bucket side length.
    hb: f64,
    /// Buckets per side.
    nb: i64,
    buckets: Vec<Vec<u32>>,
    points: Vec<Pt>,
}

impl SeedGrid {
    fn build(points: Vec<Pt>) -> SeedGrid {
        let n = points.len().max(1);
        let mut lo = Pt::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Pt::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &points {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        let nb = ((n as f64 / 2.0).sqrt().ceil() as i64).max(1);
        let extent = (hi.x - lo.x).max(hi.y - lo.y).max(1e-30);
        let hb = extent / nb as f64 * (1.0 + 1e-12);
        let mut grid = SeedGrid {
            x0: lo.x,
            y0: lo.y,
            hb,
            nb,
            buckets: vec![Vec::new(); (nb * nb) as usize],
            points,
        };
        for (i, p) in grid.points.iter().enumerate() {
            let (bi, bj) = bucket_index(grid.x0, grid.y0, grid.hb, grid.nb, *p);
            grid.buckets[(bj * grid.nb + bi) as usize].push(i as u32);
        }
        grid
    }

    fn bucket_of(&self, p: Pt) -> (i64, i64) {
        bucket_index(self.x0, self.y0, self.hb, self.nb, p)
    }

    /// Collects (squared distance to `s`, point id) for every point whose
    /// bucket is at Chebyshev distance exactly `r` from (bi, bj).
    fn ring_candidates(&self, bi: i64, bj: i64, r: i64, s: Pt, out: &mut Vec<(f64, u32)>) {
        out.clear();
        let visit = |i: i64, j: i64, out: &mut Vec<(f64, u32)>| {
            if i < 0 || j < 0 || i >= self.nb || j >= self.nb {
                return;
            }
            for &id in &self.buckets[(j * self.nb + i) as usize] {
                let d2 = (self.points[id as usize] - s).norm_sq();
                out.push((d2, id));
            }
        };
        if r == 0 {
            visit(bi, bj, out);
            return;
        }
        for i in (bi - r)..=(bi + r) {
            visit(i, bj - r, out);
            visit(i, bj + r, out);
        }
        for j in (bj - r + 1)..(bj + r) {
            visit(bi - r, j, out);
            visit(bi + r, j, out);
        }
    }
}

fn bucket_index(x0: f64, y0: f64, hb: f64, nb: i64, p: Pt) -> (i64, i64) {
    let bi = (((p.x - x0) / hb).floor() as i64).clamp(0, nb - 1);
    let bj = (((p.y - y0) / hb).floor() as i64).clamp(0, nb - 1);
    (bi, bj)
}

/// Merges vertices shared between cells (tolerance 1e-10) and assembles the
/// validated mesh.
fn mesh_from_cells(cells: &[Vec<Pt>]) -> Result<PolygonalMesh, MeshError> {
    const TOL: f64 = 1e-10;
    let mut map: HashMap<(i64, i64), Vec<u32>> = HashMap::new();
    let mut vertices: Vec<Pt> = Vec::new();
    let mut id_of = |p: Pt, vertices: &mut Vec<Pt>| -> u32 {
        let kx = (p.x / TOL).floor() as i64;
        let ky = (p.y / TOL).floor() as i64;
        let mut best: Option<(f64, u32)> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = map.get(&(kx + dx, ky + dy)) {
                    for &id in ids {
                        let d = (vertices[id as usize] - p).norm();
                        if d <= TOL && best.is_none_or(|(bd, _)| d < bd) {
                            best = Some((d, id));
                        }
                    }
                }
            }
        }
        if let Some((_, id)) = best {
            return id;
        }
        let id = vertices.len() as u32;
        vertices.push(p);
        map.entry((kx, ky)).or_default().push(id);
        id
    };

    let mut elements = Vec::with_capacity(cells.len());
    for (ci, cell) in cells.iter().enumerate() {
        let mut cycle: Vec<usize> = cell
            .iter()
            .map(|&p| id_of(p, &mut vertices) as usize)
            .collect();
        cycle.dedup();
        while cycle.len() > 1 && cycle.first() == cycle.last() {
            cycle.pop();
        }
        if cycle.len() < 3 {
            return Err(MeshError::Generation(format!(
                "cell {ci} degenerated to fewer than 3 distinct vertices; \
                 try more Lloyd iterations"
            )));
        }
        elements.push(cycle);
    }
    PolygonalMesh::new(vertices, elements)
}

fn snap_boundary_to_circle(
    mesh: PolygonalMesh,
    radius: f64,
) -> Result<PolygonalMesh, MeshError> {
    let mut vertices = mesh.vertices.clone();
    for (i, v) in vertices.iter_mut().enumerate() {
        if mesh.boundary_vertex[i] {
            let r = v.norm();
            if r < 1e-9 * radius {
                return Err(MeshError::Generation(
                    "boundary vertex at the disk centre".into(),
                ));
            }
            *v = *v * (radius / r);
        }
    }
    PolygonalMesh::new(vertices, mesh.elements)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn four_symmetric_seeds_are_a_lloyd_fixed_point() {
        let seeds = vec![
            Pt::new(0.25, 0.25),
            Pt::new(0.75, 0.25),
            Pt::new(0.25, 0.75),
            Pt::new(0.75, 0.75),
        ];
        let mesh =
            generate_cvt_from_seeds(seeds, 100, ClipDomain::UnitSquare).unwrap();
        assert_eq!(mesh.n_elements(), 4);
        assert_eq!(mesh.n_vertices(), 9);
        // four congruent quadrants, each with diameter sqrt(2)/2
        assert!((mesh.global_mesh_size() - 2f64.sqrt() / 2.0).abs() < 1e-6);
        assert!((mesh.domain_area - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hundred_cell_mesh_has_expected_size() {
        let mesh = generate_cvt(100, 100, 42).unwrap();
        assert_eq!(mesh.n_elements(), 100);
        let h = mesh.global_mesh_size();
        assert!((0.08..=0.18).contains(&h), "h = {h}");
        assert!((mesh.domain_area - 1.0).abs() < 1e-9);
        let reg = mesh.check_regularity();
        assert!(reg.delta_min > 1e-4, "delta_min = {}", reg.delta_min);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_cvt(30, 20, 7).unwrap();
        let b = generate_cvt(30, 20, 7).unwrap();
        assert_eq!(a.elements, b.elements);
        for (p, q) in a.vertices.iter().zip(&b.vertices) {
            assert_eq!(p.x, q.x);
            assert_eq!(p.y, q.y);
        }
    }

    #[test]
    fn disk_mesh_boundary_lies_on_circle() {
        let r = 0.5;
        let mesh = generate_cvt_disk(48, 100, 1, r).unwrap();
        assert_eq!(mesh.n_elements(), 48);
        for (i, v) in mesh.vertices.iter().enumerate() {
            if mesh.boundary_vertex[i] {
                assert!((v.norm() - r).abs() < 1e-12);
            } else {
                assert!(v.norm() < r);
            }
        }
        let disk_area = std::f64::consts::PI * r * r;
        assert!(mesh.domain_area < disk_area);
        assert!(mesh.domain_area > 0.97 * disk_area);
        let h = mesh.global_mesh_size();
        assert!((0.10..=0.25).contains(&h), "h = {h}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]
        #[test]
        fn lloyd_energy_is_non_increasing(n in 5usize..40, seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut seeds: Vec<Pt> = (0..n)
                .map(|_| Pt::new(rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)))
                .collect();
            let mut energies = Vec::new();
            for _ in 0..15 {
                energies.push(lloyd_iterate(&mut seeds, ClipDomain::UnitSquare).unwrap());
            }
            for w in energies.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-12 * energies[0]);
            }
        }
    }
}
