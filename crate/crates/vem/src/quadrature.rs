//! Quadrature rules: 1D Gauss-Legendre and Gauss-Lobatto, and polygon volume
//! rules built by fan triangulation from the centroid with a conical-product
//! Gauss rule on each triangle.

use crate::geometry::Pt;
use crate::{Result, VemError};

/// Volume quadrature over a polygon. Weights carry the area measure: they sum
/// to the polygon area and the rule is exact for polynomials up to `order`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub points: Vec<Pt>,
    pub weights: Vec<f64>,
    pub order: usize,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn integrate(&self, mut f: impl FnMut(Pt) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| w * f(p))
            .sum()
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1], exact for degree 2n-1.
/// Nodes are the roots of the degree-n Legendre polynomial, found by Newton
/// iteration on the three-term recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Tricomi-style initial guess, then Newton
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre_and_deriv(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_deriv(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x.abs();
        nodes[n - 1 - i] = x.abs();
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_and_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for j in 1..n {
        let jf = j as f64;
        let p2 = ((2.0 * jf + 1.0) * x * p1 - jf * p0) / (jf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss-Lobatto nodes on [-1, 1] for VEM degree k: k+1 nodes including the
/// endpoints, exact for degree 2k-1. Supported degrees are 1..=3, for which
/// the nodes and weights have simple closed forms.
pub fn gauss_lobatto(k: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let s5 = 1.0 / 5f64.sqrt();
    match k {
        1 => Ok((vec![-1.0, 1.0], vec![1.0, 1.0])),
        2 => Ok((vec![-1.0, 0.0, 1.0], vec![1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0])),
        3 => Ok((
            vec![-1.0, -s5, s5, 1.0],
            vec![1.0 / 6.0, 5.0 / 6.0, 5.0 / 6.0, 1.0 / 6.0],
        )),
        _ => Err(VemError::Invalid(format!(
            "unsupported degree k = {k}; supported range is 1..=3"
        ))),
    }
}

/// Nodes only, per the degree-of-freedom definition.
pub fn gauss_lobatto_nodes(k: usize) -> Result<Vec<f64>> {
    Ok(gauss_lobatto(k)?.0)
}

/// Conical-product Gauss rule on the triangle (p0, p1, p2), exact for
/// polynomials of total degree `order`. Built from the Duffy substitution
/// x = u(1-v), y = v on the reference triangle, which folds the Jacobian
/// factor (1-v) into the degree budget of the v direction.
fn triangle_rule(p0: Pt, p1: Pt, p2: Pt, order: usize, points: &mut Vec<Pt>, weights: &mut Vec<f64>) {
    let nu = (order + 2) / 2; // exact in u for degree `order`
    let nv = (order + 3) / 2; // degree `order` plus the Jacobian factor
    let (xu, wu) = gauss_legendre(nu);
    let (xv, wv) = gauss_legendre(nv);
    let e1 = p1 - p0;
    let e2 = p2 - p0;
    let det = e1.cross(e2); // twice the signed area
    for (iu, &u01) in xu.iter().enumerate() {
        let u = 0.5 * (u01 + 1.0);
        for (iv, &v01) in xv.iter().enumerate() {
            let v = 0.5 * (v01 + 1.0);
            let x = u * (1.0 - v);
            let y = v;
            // 0.25 rescales the [-1,1]^2 weights to the unit square
            let w = 0.25 * wu[iu] * wv[iv] * (1.0 - v) * det;
            points.push(p0 + e1 * x + e2 * y);
            weights.push(w);
        }
    }
}

/// Quadrature over a polygon by fan triangulation from an interior point
/// (the centroid). Fails if any fan triangle has non-positive area, which
/// signals a polygon that is not star-shaped with respect to the centroid.
pub fn polygon_quadrature_from(verts: &[Pt], center: Pt, order: usize) -> Result<QuadratureRule> {
    assert!(order >= 1);
    let n = verts.len();
    let mut points = Vec::new();
    let mut weights = Vec::new();
    for i in 0..n {
        let a = verts[i];
        let b = verts[(i + 1) % n];
        if (a - center).cross(b - center) <= 0.0 {
            return Err(VemError::Quadrature(format!(
                "fan triangle {i} has non-positive area; polygon not star-shaped w.r.t. centroid"
            )));
        }
        triangle_rule(center, a, b, order, &mut points, &mut weights);
    }
    Ok(QuadratureRule {
        points,
        weights,
        order,
    })
}

pub fn polygon_quadrature(verts: &[Pt], order: usize) -> Result<QuadratureRule> {
    let center = crate::geometry::polygon_centroid(verts);
    polygon_quadrature_from(verts, center, order)
}

/// Reference integral of x^a y^b over a polygon, computed independently of
/// the volume rules: the divergence theorem reduces the area integral to edge
/// integrals of x^{a+1} y^b n_x / (a+1), which are evaluated with a 1D
/// Gauss-Legendre rule of sufficient order. Serves as the exactness oracle
/// for `polygon_quadrature`.
pub fn polygon_monomial_integral(verts: &[Pt], a: u32, b: u32) -> f64 {
    let deg = (a + 1 + b) as usize;
    let (xs, ws) = gauss_legendre(deg / 2 + 1);
    let n = verts.len();
    let mut total = 0.0;
    for i in 0..n {
        let p = verts[i];
        let q = verts[(i + 1) % n];
        let e = q - p;
        let len = e.norm();
        if len == 0.0 {
            continue;
        }
        // outward normal x-component times arclength element
        let nx_ds = e.y; // (e.y, -e.x)/len * (len/2) d t, t in [-1,1] gives e.y/2
        let mut edge = 0.0;
        for (&t, &w) in xs.iter().zip(&ws) {
            let s = 0.5 * (t + 1.0);
            let x = p.x + e.x * s;
            let y = p.y + e.y * s;
            edge += w * x.powi(a as i32 + 1) * y.powi(b as i32);
        }
        total += edge * 0.5 * nx_ds / (a as f64 + 1.0);
    }
    total
}
