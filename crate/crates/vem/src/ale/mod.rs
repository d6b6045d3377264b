//! Discrete ALE maps: DoF vectors for vector-valued fields, interpolation
//! through a map (isoparametric composition), and the prescribed motions of
//! the computational domain.

pub mod forms;
pub mod maps;

use crate::geometry::Pt;
use crate::space::{ElementData, VemSpace};

/// DoF vectors of the two components of a map, velocity, or any other
/// vector-valued member of [V_h]^2.
#[derive(Debug, Clone)]
pub struct MapDofs {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl MapDofs {
    pub fn zeros(n: usize) -> MapDofs {
        MapDofs {
            x: vec![0.0; n],
            y: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Componentwise interpolation of an analytic vector field of the
    /// reference coordinate.
    pub fn interpolate(space: &VemSpace, f: impl Fn(Pt) -> Pt) -> MapDofs {
        let layout = &space.layout;
        let mut out = MapDofs::zeros(layout.n_dofs);
        for (i, p) in layout.node_pos.iter().enumerate() {
            let v = f(*p);
            out.x[i] = v.x;
            out.y[i] = v.y;
        }
        let n2 = layout.n_moment;
        for (ei, el) in space.elems.iter().enumerate() {
            let base = layout.n_point_dofs + ei * n2;
            for q in 0..el.quad_pts.len() {
                let v = f(el.quad_pts[q]);
                let w = el.quad_wts[q] / el.area;
                for beta in 0..n2 {
                    let mw = w * el.mono_vals[q * el.n_k + beta];
                    out.x[base + beta] += mw * v.x;
                    out.y[base + beta] += mw * v.y;
                }
            }
        }
        out
    }

    pub fn identity(space: &VemSpace) -> MapDofs {
        MapDofs::interpolate(space, |p| p)
    }

    /// self += a * other
    pub fn axpy(&mut self, a: f64, other: &MapDofs) {
        for (s, o) in self.x.iter_mut().zip(&other.x) {
            *s += a * o;
        }
        for (s, o) in self.y.iter_mut().zip(&other.y) {
            *s += a * o;
        }
    }

    /// Physical position of a point DoF under this map.
    #[inline]
    pub fn point(&self, dof: usize) -> Pt {
        Pt::new(self.x[dof], self.y[dof])
    }
}

/// Evaluates the polynomial (L2-projected) image of the element under the
/// map at the volume quadrature points.
pub(crate) fn element_phys_points(
    el: &ElementData,
    ax: &[f64],
    ay: &[f64],
    cx: &mut [f64],
    cy: &mut [f64],
    out: &mut [Pt],
) {
    el.pi0.matvec(ax, cx);
    el.pi0.matvec(ay, cy);
    let nk = el.n_k;
    for (q, o) in out.iter_mut().enumerate() {
        let row = &el.mono_vals[q * nk..(q + 1) * nk];
        let mut x = 0.0;
        let mut y = 0.0;
        for a in 0..nk {
            x += cx[a] * row[a];
            y += cy[a] * row[a];
        }
        *o = Pt::new(x, y);
    }
}

/// Interpolates a spatial scalar field composed with a discrete map: point
/// DoFs read the map's point positions, moment DoFs integrate through the
/// map's elementwise polynomial image.
pub fn interpolate_composed(
    space: &VemSpace,
    map: &MapDofs,
    g: impl Fn(Pt) -> f64,
) -> Vec<f64> {
    let layout = &space.layout;
    let mut out = vec![0.0; layout.n_dofs];
    for i in 0..layout.n_point_dofs {
        out[i] = g(map.point(i));
    }
    let n2 = layout.n_moment;
    if n2 == 0 {
        return out;
    }
    let mut ax = Vec::new();
    let mut ay = Vec::new();
    let mut cx = Vec::new();
    let mut cy = Vec::new();
    let mut phys: Vec<Pt> = Vec::new();
    for (ei, el) in space.elems.iter().enumerate() {
        gather_pair(space, ei, map, &mut ax, &mut ay);
        cx.resize(el.n_k, 0.0);
        cy.resize(el.n_k, 0.0);
        phys.resize(el.quad_pts.len(), Pt::ZERO);
        element_phys_points(el, &ax, &ay, &mut cx, &mut cy, &mut phys);
        let base = layout.n_point_dofs + ei * n2;
        for q in 0..phys.len() {
            let gw = g(phys[q]) * el.quad_wts[q] / el.area;
            for beta in 0..n2 {
                out[base + beta] += gw * el.mono_vals[q * el.n_k + beta];
            }
        }
    }
    out
}

/// Vector-field version of `interpolate_composed`.
pub fn interpolate_composed_map(
    space: &VemSpace,
    map: &MapDofs,
    u: impl Fn(Pt) -> Pt,
) -> MapDofs {
    let layout = &space.layout;
    let mut out = MapDofs::zeros(layout.n_dofs);
    for i in 0..layout.n_point_dofs {
        let v = u(map.point(i));
        out.x[i] = v.x;
        out.y[i] = v.y;
    }
    let n2 = layout.n_moment;
    if n2 == 0 {
        return out;
    }
    let mut ax = Vec::new();
    let mut ay = Vec::new();
    let mut cx = Vec::new();
    let mut cy = Vec::new();
    let mut phys: Vec<Pt> = Vec::new();
    for (ei, el) in space.elems.iter().enumerate() {
        gather_pair(space, ei, map, &mut ax, &mut ay);
        cx.resize(el.n_k, 0.0);
        cy.resize(el.n_k, 0.0);
        phys.resize(el.quad_pts.len(), Pt::ZERO);
        element_phys_points(el, &ax, &ay, &mut cx, &mut cy, &mut phys);
        let base = layout.n_point_dofs + ei * n2;
        for q in 0..phys.len() {
            let v = u(phys[q]);
            let w = el.quad_wts[q] / el.area;
            for beta in 0..n2 {
                let mw = w * el.mono_vals[q * el.n_k + beta];
                out.x[base + beta] += mw * v.x;
                out.y[base + beta] += mw * v.y;
            }
        }
    }
    out
}

pub(crate) fn gather_pair(
    space: &VemSpace,
    ei: usize,
    map: &MapDofs,
    ax: &mut Vec<f64>,
    ay: &mut Vec<f64>,
) {
    ax.clear();
    ay.clear();
    for &g in &space.layout.elem_dofs[ei] {
        ax.push(map.x[g]);
        ay.push(map.y[g]);
    }
}

/// How the computational domain moves.
pub enum Motion {
    /// Time-independent map of the reference domain; mesh velocity is zero.
    Static(Box<dyn Fn(Pt) -> Pt>),
    /// Analytic map and its time derivative, both in reference coordinates.
    Analytic {
        map: Box<dyn Fn(Pt, f64) -> Pt>,
        velocity: Box<dyn Fn(Pt, f64) -> Pt>,
    },
    /// Spatial velocity field u(x, t); the map is advanced by Heun's method.
    SpatialVelocity(Box<dyn Fn(Pt, f64) -> Pt>),
}

impl Motion {
    pub fn is_static(&self) -> bool {
        matches!(self, Motion::Static(_))
    }
}
