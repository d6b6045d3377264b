//! Polygonal reference meshes: connectivity, geometric quantities, regularity
//! audits, text-format I/O and the seeded CVT generator.

pub mod io;
pub mod voronoi;

use crate::geometry::{
    polygon_centroid, polygon_diameter, polygon_is_simple, polygon_signed_area, Pt,
};

pub use io::{load_mesh, save_mesh};
pub use voronoi::{generate_cvt, generate_cvt_disk, generate_cvt_from_seeds, ClipDomain};

#[derive(Debug, thiserror::Error)]
pub enum MeshError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid mesh: {0}")]
    Invalid(String),
    #[error("invalid element {elem}: {msg}")]
    Element { elem: usize, msg: String },
    #[error("cvt generation: {0}")]
    Generation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Undirected mesh edge; `a < b` is the canonical orientation used for
/// globally consistent edge DoF ordering.
#[derive(Debug, Clone)]
pub struct MeshEdge {
    pub a: usize,
    pub b: usize,
    /// Incident elements: (element index, local edge index, forward).
    /// `forward` means the element traverses the edge a -> b.
    pub elems: Vec<(usize, usize, bool)>,
}

/// A conforming polygonal mesh of the reference domain. Immutable after
/// construction; all connectivity is validated by `new`.
#[derive(Debug, Clone)]
pub struct PolygonalMesh {
    pub vertices: Vec<Pt>,
    /// Counter-clockwise vertex-index cycles.
    pub elements: Vec<Vec<usize>>,
    pub boundary_vertex: Vec<bool>,
    /// (element, local edge) pairs lying on the domain boundary.
    pub boundary_edges: Vec<(usize, usize)>,
    pub edges: Vec<MeshEdge>,
    /// Per element: global edge index and direction flag for each local edge.
    pub elem_edges: Vec<Vec<(usize, bool)>>,
    /// Area enclosed by the boundary edge loop.
    pub domain_area: f64,
}

#[derive(Debug, Clone)]
pub struct EdgeGeom {
    pub a: Pt,
    pub b: Pt,
    pub len: f64,
    /// Outward unit normal.
    pub normal: Pt,
}

#[derive(Debug, Clone)]
pub struct ElementGeometry {
    pub verts: Vec<Pt>,
    pub area: f64,
    pub centroid: Pt,
    /// Element diameter h_E (max pairwise vertex distance).
    pub diameter: f64,
    pub edges: Vec<EdgeGeom>,
}

#[derive(Debug, Clone)]
pub struct RegularityReport {
    /// Lower bound found for the star-shapedness radius ratio.
    pub gamma_min: f64,
    /// Minimum of (edge length / element diameter).
    pub delta_min: f64,
    pub worst_element: usize,
    /// True when some element is non-convex, in which case gamma is the
    /// centroid-kernel estimate rather than an exact inradius.
    pub gamma_approximate: bool,
}

impl PolygonalMesh {
    /// Builds and fully validates a mesh from raw vertex and element data.
    pub fn new(vertices: Vec<Pt>, elements: Vec<Vec<usize>>) -> Result<Self, MeshError> {
        let nv = vertices.len();
        if elements.is_empty() {
            return Err(MeshError::Invalid("mesh has no elements".into()));
        }
        for (ei, cycle) in elements.iter().enumerate() {
            if cycle.len() < 3 {
                return Err(MeshError::Element {
                    elem: ei,
                    msg: format!("only {} vertices; polygons need at least 3", cycle.len()),
                });
            }
            for &v in cycle {
                if v >= nv {
                    return Err(MeshError::Element {
                        elem: ei,
                        msg: format!("vertex index {v} out of range (NV = {nv})"),
                    });
                }
            }
            let mut sorted = cycle.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(MeshError::Element {
                    elem: ei,
                    msg: "repeated vertex in cycle".into(),
                });
            }
            let pts: Vec<Pt> = cycle.iter().map(|&v| vertices[v]).collect();
            if !polygon_is_simple(&pts) {
                return Err(MeshError::Element {
                    elem: ei,
                    msg: "self-intersecting polygon".into(),
                });
            }
            if polygon_signed_area(&pts) <= 0.0 {
                return Err(MeshError::Element {
                    elem: ei,
                    msg: "vertices not in counter-clockwise order".into(),
                });
            }
        }

        // Edge table keyed by (min, max) vertex ids.
        let mut edge_ids: std::collections::HashMap<(usize, usize), usize> =
            std::collections::HashMap::new();
        let mut edges: Vec<MeshEdge> = Vec::new();
        let mut elem_edges: Vec<Vec<(usize, bool)>> = vec![Vec::new(); elements.len()];
        for (ei, cycle) in elements.iter().enumerate() {
            let m = cycle.len();
            for le in 0..m {
                let (u, v) = (cycle[le], cycle[(le + 1) % m]);
                let key = (u.min(v), u.max(v));
                let forward = u < v;
                let id = *edge_ids.entry(key).or_insert_with(|| {
                    edges.push(MeshEdge {
                        a: key.0,
                        b: key.1,
                        elems: Vec::new(),
                    });
                    edges.len() - 1
                });
                edges[id].elems.push((ei, le, forward));
                elem_edges[ei].push((id, forward));
            }
        }
        let mut boundary_edges = Vec::new();
        let mut boundary_vertex = vec![false; nv];
        for e in &edges {
            match e.elems.len() {
                1 => {
                    let (ei, le, _) = e.elems[0];
                    boundary_edges.push((ei, le));
                    boundary_vertex[e.a] = true;
                    boundary_vertex[e.b] = true;
                }
                2 => {
                    if e.elems[0].2 == e.elems[1].2 {
                        return Err(MeshError::Invalid(format!(
                            "edge ({}, {}) traversed in the same direction by elements {} and {} \
                             (overlap or inconsistent orientation)",
                            e.a, e.b, e.elems[0].0, e.elems[1].0
                        )));
                    }
                }
                n => {
                    return Err(MeshError::Invalid(format!(
                        "edge ({}, {}) shared by {n} elements",
                        e.a, e.b
                    )));
                }
            }
        }

        // Tiling check: interior edges cancel in the sum of signed shoelace
        // contributions, so the element areas must add up to the area of the
        // boundary edge loop.
        let mut total_area = 0.0;
        for cycle in &elements {
            let pts: Vec<Pt> = cycle.iter().map(|&v| vertices[v]).collect();
            total_area += polygon_signed_area(&pts);
        }
        let mut boundary_loop_area = 0.0;
        for &(ei, le) in &boundary_edges {
            let cycle = &elements[ei];
            let a = vertices[cycle[le]];
            let b = vertices[cycle[(le + 1) % cycle.len()]];
            boundary_loop_area += 0.5 * a.cross(b);
        }
        if (total_area - boundary_loop_area).abs() > 1e-12 * total_area.abs() {
            return Err(MeshError::Invalid(format!(
                "element areas sum to {total_area:.15e} but the boundary loop encloses \
                 {boundary_loop_area:.15e}; elements overlap or leave gaps"
            )));
        }

        Ok(PolygonalMesh {
            vertices,
            elements,
            boundary_vertex,
            boundary_edges,
            edges,
            elem_edges,
            domain_area: boundary_loop_area,
        })
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn element_geometry(&self, elem: usize) -> ElementGeometry {
        let cycle = &self.elements[elem];
        let verts: Vec<Pt> = cycle.iter().map(|&v| self.vertices[v]).collect();
        element_geometry_of(&verts)
    }

    pub fn global_mesh_size(&self) -> f64 {
        (0..self.n_elements())
            .map(|e| self.element_geometry(e).diameter)
            .fold(0.0, f64::max)
    }

    pub fn check_regularity(&self) -> RegularityReport {
        let mut gamma_min = f64::INFINITY;
        let mut delta_min = f64::INFINITY;
        let mut worst = 0usize;
        let mut worst_score = f64::INFINITY;
        let mut approximate = false;
        for ei in 0..self.n_elements() {
            let g = self.element_geometry(ei);
            let delta = g
                .edges
                .iter()
                .map(|e| e.len)
                .fold(f64::INFINITY, f64::min)
                / g.diameter;
            // Star-shapedness radius with respect to the centroid: distance
            // from the centroid to the nearest boundary point. Exact inradius
            // for centrally symmetric convex cells; a kernel lower bound
            // otherwise.
            let mut r = f64::INFINITY;
            for e in &g.edges {
                r = r.min(point_segment_distance(g.centroid, e.a, e.b));
            }
            let gamma = r / g.diameter;
            if !polygon_is_convex(&g.verts) {
                approximate = true;
            }
            gamma_min = gamma_min.min(gamma);
            delta_min = delta_min.min(delta);
            let score = delta.min(gamma);
            if score < worst_score {
                worst_score = score;
                worst = ei;
            }
        }
        RegularityReport {
            gamma_min,
            delta_min,
            worst_element: worst,
            gamma_approximate: approximate,
        }
    }
}

pub fn element_geometry_of(verts: &[Pt]) -> ElementGeometry {
    let area = polygon_signed_area(verts);
    let centroid = polygon_centroid(verts);
    let diameter = polygon_diameter(verts);
    let n = verts.len();
    let edges = (0..n)
        .map(|i| {
            let a = verts[i];
            let b = verts[(i + 1) % n];
            let d = b - a;
            let len = d.norm();
            EdgeGeom {
                a,
                b,
                len,
                normal: Pt::new(d.y / len, -d.x / len),
            }
        })
        .collect();
    ElementGeometry {
        verts: verts.to_vec(),
        area,
        centroid,
        diameter,
        edges,
    }
}

fn point_segment_distance(p: Pt, a: Pt, b: Pt) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(ab) / ab.norm_sq()).clamp(0.0, 1.0);
    (a + ab * t - p).norm()
}

fn polygon_is_convex(verts: &[Pt]) -> bool {
    let n = verts.len();
    (0..n).all(|i| {
        let a = verts[i];
        let b = verts[(i + 1) % n];
        let c = verts[(i + 2) % n];
        (b - a).cross(c - b) > -1e-14
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub fn unit_square_mesh() -> PolygonalMesh {
        PolygonalMesh::new(
            vec![
                Pt::new(0.0, 0.0),
                Pt::new(1.0, 0.0),
                Pt::new(1.0, 1.0),
                Pt::new(0.0, 1.0),
            ],
            vec![vec![0, 1, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn unit_square_geometry() {
        let m = unit_square_mesh();
        let g = m.element_geometry(0);
        assert!((g.area - 1.0).abs() < 1e-15);
        assert!((g.centroid.x - 0.5).abs() < 1e-15);
        assert!((g.diameter - 2f64.sqrt()).abs() < 1e-15);
        assert!((m.global_mesh_size() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(m.boundary_edges.len(), 4);
        assert!(m.boundary_vertex.iter().all(|&b| b));
    }

    #[test]
    fn two_squares_share_an_edge() {
        let m = PolygonalMesh::new(
            vec![
                Pt::new(0.0, 0.0),
                Pt::new(1.0, 0.0),
                Pt::new(2.0, 0.0),
                Pt::new(2.0, 1.0),
                Pt::new(1.0, 1.0),
                Pt::new(0.0, 1.0),
            ],
            vec![vec![0, 1, 4, 5], vec![1, 2, 3, 4]],
        )
        .unwrap();
        assert!((m.global_mesh_size() - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(m.boundary_edges.len(), 6);
        let shared = m.edges.iter().find(|e| e.elems.len() == 2).unwrap();
        assert_eq!((shared.a, shared.b), (1, 4));
        assert!((m.domain_area - 2.0).abs() < 1e-14);
    }

    #[test]
    fn duplicated_element_rejected() {
        let err = PolygonalMesh::new(
            vec![
                Pt::new(0.0, 0.0),
                Pt::new(1.0, 0.0),
                Pt::new(1.0, 1.0),
                Pt::new(0.0, 1.0),
            ],
            vec![vec![0, 1, 2, 3], vec![0, 1, 2, 3]],
        )
        .unwrap_err();
        assert!(matches!(err, MeshError::Invalid(_)), "{err}");
    }

    #[test]
    fn regularity_of_unit_square() {
        let m = unit_square_mesh();
        let r = m.check_regularity();
        assert!((r.delta_min - 1.0 / 2f64.sqrt()).abs() < 1e-14);
        assert!((r.gamma_min - 0.5 / 2f64.sqrt()).abs() < 1e-14);
        assert!(!r.gamma_approximate);
    }

    #[test]
    fn short_edge_flagged() {
        // quad with one edge of length ~1e-9
        let eps = 1e-9;
        let m = PolygonalMesh::new(
            vec![
                Pt::new(0.0, 0.0),
                Pt::new(1.0, 0.0),
                Pt::new(1.0, 1.0),
                Pt::new(eps, 1.0),
                Pt::new(0.0, 1.0 - eps),
            ],
            vec![vec![0, 1, 2, 3, 4]],
        )
        .unwrap();
        let r = m.check_regularity();
        assert!(r.delta_min < 2e-9);
        assert_eq!(r.worst_element, 0);
    }
}
