//! Error norms through the discrete map and convergence-rate helpers.

use crate::ale::forms::{map_jacobians, Scratch};
use crate::ale::MapDofs;
use crate::space::VemSpace;
use crate::Result;

#[derive(Debug, Clone, Copy)]
pub struct ErrorNorms {
    pub l2: f64,
    /// H1 seminorm of the projected error, gradients taken on the image.
    pub h1: f64,
}

/// L2 and H1 errors of `a - b` over the image of the discrete map: both
/// fields live on the reference mesh, values are projected with Pi0 and
/// gradients with Pi1 pushed forward by the map Jacobian.
pub fn l2_h1_errors(space: &VemSpace, map: &MapDofs, a: &[f64], b: &[f64]) -> Result<ErrorNorms> {
    let mut s = Scratch::new();
    let mut la = Vec::new();
    let mut lb = Vec::new();
    let mut ax = Vec::new();
    let mut ay = Vec::new();
    let mut c0 = Vec::new();
    let mut c1x = Vec::new();
    let mut c1y = Vec::new();
    let mut l2 = 0.0;
    let mut h1 = 0.0;
    for (ei, el) in space.elems.iter().enumerate() {
        space.gather(ei, a, &mut la);
        space.gather(ei, b, &mut lb);
        for (va, &vb) in la.iter_mut().zip(&lb) {
            *va -= vb;
        }
        ax.clear();
        ay.clear();
        for &g in &space.layout.elem_dofs[ei] {
            ax.push(map.x[g]);
            ay.push(map.y[g]);
        }
        map_jacobians(el, ei, 0.0, &ax, &ay, &mut s)?;
        let nk = el.n_k;
        let n1 = el.n_k1;
        c0.resize(nk, 0.0);
        c1x.resize(n1, 0.0);
        c1y.resize(n1, 0.0);
        el.pi0.matvec(&la, &mut c0);
        el.pi1x.matvec(&la, &mut c1x);
        el.pi1y.matvec(&la, &mut c1y);
        for q in 0..el.quad_pts.len() {
            let row = &el.mono_vals[q * nk..(q + 1) * nk];
            let wj = el.quad_wts[q] * s.jdet[q];
            let val: f64 = c0.iter().zip(row).map(|(c, m)| c * m).sum();
            let gxr: f64 = c1x.iter().zip(row).map(|(c, m)| c * m).sum();
            let gyr: f64 = c1y.iter().zip(row).map(|(c, m)| c * m).sum();
            // physical gradient J^-T grad_ref
            let ji = s.jinv[q];
            let gx = ji[0] * gxr + ji[2] * gyr;
            let gy = ji[1] * gxr + ji[3] * gyr;
            l2 += wj * val * val;
            h1 += wj * (gx * gx + gy * gy);
        }
    }
    Ok(ErrorNorms {
        l2: l2.sqrt(),
        h1: h1.sqrt(),
    })
}

/// Area of the image of the discrete map.
pub fn mapped_area(space: &VemSpace, map: &MapDofs) -> Result<f64> {
    let mut s = Scratch::new();
    let mut ax = Vec::new();
    let mut ay = Vec::new();
    let mut area = 0.0;
    for (ei, el) in space.elems.iter().enumerate() {
        ax.clear();
        ay.clear();
        for &g in &space.layout.elem_dofs[ei] {
            ax.push(map.x[g]);
            ay.push(map.y[g]);
        }
        map_jacobians(el, ei, 0.0, &ax, &ay, &mut s)?;
        for (w, j) in el.quad_wts.iter().zip(&s.jdet) {
            area += w * j;
        }
    }
    Ok(area)
}

/// Largest element diameter of the reference mesh.
pub fn mesh_size(space: &VemSpace) -> f64 {
    space.elems.iter().map(|el| el.h).fold(0.0, f64::max)
}

/// Mean absolute DoF difference.
pub fn l1_dof_error(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().max(1);
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / n as f64
}

/// Mean absolute radial deviation of boundary point positions from `r`.
pub fn boundary_radius_error(space: &VemSpace, map: &MapDofs, r: f64) -> f64 {
    let layout = &space.layout;
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in 0..layout.n_point_dofs {
        if layout.boundary[i] {
            sum += (map.point(i).norm() - r).abs();
            count += 1;
        }
    }
    sum / count.max(1) as f64
}

/// Orders of convergence between consecutive levels: log(e0/e1)/log(h0/h1).
pub fn pairwise_rates(h: &[f64], e: &[f64]) -> Vec<f64> {
    (1..h.len().min(e.len()))
        .map(|i| (e[i - 1] / e[i]).ln() / (h[i - 1] / h[i]).ln())
        .collect()
}

/// Least-squares slope of log e against log h over all levels.
pub fn fitted_rate(h: &[f64], e: &[f64]) -> f64 {
    let n = h.len().min(e.len());
    if n < 2 {
        return f64::NAN;
    }
    let xs: Vec<f64> = h[..n].iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = e[..n].iter().map(|v| v.ln()).collect();
    let xm = xs.iter().sum::<f64>() / n as f64;
    let ym = ys.iter().sum::<f64>() / n as f64;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        num += (x - xm) * (y - ym);
        den += (x - xm) * (x - xm);
    }
    num / den
}
