//! Per-element assembly of the ALE weak forms on the reference mesh.
//!
//! With the element map A restricted to polynomial data (Pi0 for values, Pi1
//! for the Jacobian), every form reduces to small dense products around a
//! quadrature-weighted kernel: mass uses the monomial Gram with the tracked
//! Jacobian determinant, stiffness contracts gradients with J^-1 J^-T, and
//! convection tests the transport direction J^-1 (Pi0 w - b) against trial
//! values. Mass is stabilized with h^2 S, stiffness with S, convection not
//! at all.

use super::{element_phys_points, MapDofs};
use crate::geometry::Pt;
use crate::space::{ElementData, VemSpace};
use crate::{Result, VemError};

pub struct ProblemData {
    pub mu: f64,
    /// Spatial convection field b(x, t).
    pub b: Box<dyn Fn(Pt, f64) -> Pt>,
    /// Spatial forcing f(x, t).
    pub f: Box<dyn Fn(Pt, f64) -> f64>,
}

impl ProblemData {
    pub fn diffusion_only(mu: f64) -> ProblemData {
        ProblemData {
            mu,
            b: Box::new(|_, _| Pt::ZERO),
            f: Box::new(|_, _| 0.0),
        }
    }
}

/// Reused buffers for element assembly; `element_forms` resizes them.
#[derive(Default)]
pub struct Scratch {
    pub ax: Vec<f64>,
    pub ay: Vec<f64>,
    pub wx: Vec<f64>,
    pub wy: Vec<f64>,
    cx: Vec<f64>,
    cy: Vec<f64>,
    cwx: Vec<f64>,
    cwy: Vec<f64>,
    axx: Vec<f64>,
    axy: Vec<f64>,
    ayx: Vec<f64>,
    ayy: Vec<f64>,
    pub phys: Vec<Pt>,
    pub jdet: Vec<f64>,
    /// Row-major 2x2 inverse Jacobians per quadrature point.
    pub jinv: Vec<[f64; 4]>,
    kxx: Vec<f64>,
    kxy: Vec<f64>,
    kyy: Vec<f64>,
    wmat: Vec<f64>,
    rx: Vec<f64>,
    ry: Vec<f64>,
    rvec: Vec<f64>,
    t1: Vec<f64>,
    t2: Vec<f64>,
    /// Element outputs: mass, stiffness, convection (nd x nd) and load (nd).
    pub out_m: Vec<f64>,
    pub out_a: Vec<f64>,
    pub out_b: Vec<f64>,
    pub out_l: Vec<f64>,
}

impl Scratch {
    pub fn new() -> Scratch {
        Scratch::default()
    }
}

/// Evaluates the map's physical points, Jacobian determinants and inverses at
/// the element's quadrature points. Fails if the determinant is non-positive.
pub fn map_jacobians(
    el: &ElementData,
    ei: usize,
    t: f64,
    ax: &[f64],
    ay: &[f64],
    s: &mut Scratch,
) -> Result<()> {
    let nk = el.n_k;
    let n1 = el.n_k1;
    let nq = el.quad_pts.len();
    s.cx.resize(nk, 0.0);
    s.cy.resize(nk, 0.0);
    s.axx.resize(n1, 0.0);
    s.axy.resize(n1, 0.0);
    s.ayx.resize(n1, 0.0);
    s.ayy.resize(n1, 0.0);
    s.phys.resize(nq, Pt::ZERO);
    s.jdet.resize(nq, 0.0);
    s.jinv.resize(nq, [0.0; 4]);

    element_phys_points(el, ax, ay, &mut s.cx, &mut s.cy, &mut s.phys);
    el.pi1x.matvec(ax, &mut s.axx);
    el.pi1y.matvec(ax, &mut s.axy);
    el.pi1x.matvec(ay, &mut s.ayx);
    el.pi1y.matvec(ay, &mut s.ayy);

    for q in 0..nq {
        let row = &el.mono_vals[q * nk..q * nk + n1];
        let mut j = [0.0f64; 4];
        for (b, &mv) in row.iter().enumerate() {
            j[0] += s.axx[b] * mv;
            j[1] += s.axy[b] * mv;
            j[2] += s.ayx[b] * mv;
            j[3] += s.ayy[b] * mv;
        }
        let det = j[0] * j[3] - j[1] * j[2];
        if det <= 0.0 || !det.is_finite() {
            return Err(VemError::DegenerateMap { elem: ei, j: det, t });
        }
        s.jdet[q] = det;
        s.jinv[q] = [j[3] / det, -j[1] / det, -j[2] / det, j[0] / det];
    }
    Ok(())
}

/// Assembles the element mass, stiffness, convection and load contributions
/// for the map `(ax, ay)`, mesh velocity `(wx, wy)` and problem data at time
/// t, into `s.out_m`, `s.out_a`, `s.out_b`, `s.out_l`.
#[allow(clippy::too_many_arguments)]
pub fn element_forms(
    el: &ElementData,
    ei: usize,
    ax: &[f64],
    ay: &[f64],
    wx: &[f64],
    wy: &[f64],
    data: &ProblemData,
    t: f64,
    with_load: bool,
    s: &mut Scratch,
) -> Result<()> {
    let nk = el.n_k;
    let n1 = el.n_k1;
    let nd = el.nd;
    let nq = el.quad_pts.len();

    map_jacobians(el, ei, t, ax, ay, s)?;

    s.cwx.resize(nk, 0.0);
    s.cwy.resize(nk, 0.0);
    el.pi0.matvec(wx, &mut s.cwx);
    el.pi0.matvec(wy, &mut s.cwy);

    s.wmat.clear();
    s.wmat.resize(nk * nk, 0.0);
    s.kxx.clear();
    s.kxx.resize(n1 * n1, 0.0);
    s.kxy.clear();
    s.kxy.resize(n1 * n1, 0.0);
    s.kyy.clear();
    s.kyy.resize(n1 * n1, 0.0);
    s.rx.clear();
    s.rx.resize(n1 * nk, 0.0);
    s.ry.clear();
    s.ry.resize(n1 * nk, 0.0);
    s.rvec.clear();
    s.rvec.resize(nk, 0.0);

    for q in 0..nq {
        let row = &el.mono_vals[q * nk..(q + 1) * nk];
        let wj = el.quad_wts[q] * s.jdet[q];
        let ji = s.jinv[q];

        // mass kernel
        for a in 0..nk {
            let wa = wj * row[a];
            for b in a..nk {
                s.wmat[a * nk + b] += wa * row[b];
            }
        }

        // stiffness kernel: T = J^-1 J^-T
        let t11 = ji[0] * ji[0] + ji[1] * ji[1];
        let t12 = ji[0] * ji[2] + ji[1] * ji[3];
        let t22 = ji[2] * ji[2] + ji[3] * ji[3];
        for a in 0..n1 {
            let wa = wj * row[a];
            for b in 0..n1 {
                let m = wa * row[b];
                s.kxx[a * n1 + b] += t11 * m;
                s.kxy[a * n1 + b] += t12 * m;
                s.kyy[a * n1 + b] += t22 * m;
            }
        }

        // transport kernel: v = J^-1 (Pi0 w - b)
        let mut uw = Pt::ZERO;
        for a in 0..nk {
            uw.x += s.cwx[a] * row[a];
            uw.y += s.cwy[a] * row[a];
        }
        let u = uw - (data.b)(s.phys[q], t);
        let vx = ji[0] * u.x + ji[1] * u.y;
        let vy = ji[2] * u.x + ji[3] * u.y;
        for a in 0..n1 {
            let wax = wj * vx * row[a];
            let way = wj * vy * row[a];
            for b in 0..nk {
                s.rx[a * nk + b] += wax * row[b];
                s.ry[a * nk + b] += way * row[b];
            }
        }

        if with_load {
            let fv = wj * (data.f)(s.phys[q], t);
            for b in 0..nk {
                s.rvec[b] += fv * row[b];
            }
        }
    }
    for a in 0..nk {
        for b in 0..a {
            s.wmat[a * nk + b] = s.wmat[b * nk + a];
        }
    }

    // mass: pi0^T W pi0 + h^2 S
    s.out_m.clear();
    s.out_m.resize(nd * nd, 0.0);
    s.t1.clear();
    s.t1.resize(nk * nd, 0.0);
    matmul(&s.wmat, nk, nk, &el.pi0.a, nd, &mut s.t1);
    matmul_tn_add(&el.pi0.a, nk, nd, &s.t1, nd, &mut s.out_m);
    let h2 = el.h * el.h;
    for (o, &sv) in s.out_m.iter_mut().zip(&el.stab.a) {
        *o += h2 * sv;
    }

    // stiffness: pi1x^T (Kxx pi1x + Kxy pi1y) + pi1y^T (Kxy^T pi1x + Kyy pi1y) + S
    s.out_a.clear();
    s.out_a.resize(nd * nd, 0.0);
    s.t1.clear();
    s.t1.resize(n1 * nd, 0.0);
    matmul(&s.kxx, n1, n1, &el.pi1x.a, nd, &mut s.t1);
    matmul(&s.kxy, n1, n1, &el.pi1y.a, nd, &mut s.t1);
    matmul_tn_add(&el.pi1x.a, n1, nd, &s.t1, nd, &mut s.out_a);
    s.t1.clear();
    s.t1.resize(n1 * nd, 0.0);
    matmul_tn_add(&s.kxy, n1, n1, &el.pi1x.a, nd, &mut s.t1);
    matmul(&s.kyy, n1, n1, &el.pi1y.a, nd, &mut s.t1);
    matmul_tn_add(&el.pi1y.a, n1, nd, &s.t1, nd, &mut s.out_a);
    for (o, &sv) in s.out_a.iter_mut().zip(&el.stab.a) {
        *o += sv;
    }

    // convection: pi1x^T (Rx pi0) + pi1y^T (Ry pi0), unstabilized
    s.out_b.clear();
    s.out_b.resize(nd * nd, 0.0);
    s.t2.clear();
    s.t2.resize(n1 * nd, 0.0);
    matmul(&s.rx, n1, nk, &el.pi0.a, nd, &mut s.t2);
    matmul_tn_add(&el.pi1x.a, n1, nd, &s.t2, nd, &mut s.out_b);
    s.t2.clear();
    s.t2.resize(n1 * nd, 0.0);
    matmul(&s.ry, n1, nk, &el.pi0.a, nd, &mut s.t2);
    matmul_tn_add(&el.pi1y.a, n1, nd, &s.t2, nd, &mut s.out_b);

    // load: pi0^T r
    s.out_l.clear();
    s.out_l.resize(nd, 0.0);
    if with_load {
        el.pi0.matvec_t(&s.rvec, &mut s.out_l);
    }
    Ok(())
}

/// Gathers local map/velocity DoFs and assembles one element.
#[allow(clippy::too_many_arguments)]
pub fn element_forms_gathered(
    space: &VemSpace,
    ei: usize,
    map: &MapDofs,
    vel: &MapDofs,
    data: &ProblemData,
    t: f64,
    with_load: bool,
    s: &mut Scratch,
) -> Result<()> {
    let dofs = &space.layout.elem_dofs[ei];
    s.ax.clear();
    s.ay.clear();
    s.wx.clear();
    s.wy.clear();
    for &g in dofs {
        s.ax.push(map.x[g]);
        s.ay.push(map.y[g]);
        s.wx.push(vel.x[g]);
        s.wy.push(vel.y[g]);
    }
    let (ax, ay, wx, wy) = (
        std::mem::take(&mut s.ax),
        std::mem::take(&mut s.ay),
        std::mem::take(&mut s.wx),
        std::mem::take(&mut s.wy),
    );
    let r = element_forms(&space.elems[ei], ei, &ax, &ay, &wx, &wy, data, t, with_load, s);
    s.ax = ax;
    s.ay = ay;
    s.wx = wx;
    s.wy = wy;
    r
}

/// out += A (ra x ca) * B (ca x cb), all row-major.
pub(crate) fn matmul(a: &[f64], ra: usize, ca: usize, b: &[f64], cb: usize, out: &mut [f64]) {
    debug_assert_eq!(a.len(), ra * ca);
    debug_assert_eq!(b.len(), ca * cb);
    debug_assert_eq!(out.len(), ra * cb);
    for i in 0..ra {
        let arow = &a[i * ca..(i + 1) * ca];
        let orow = &mut out[i * cb..(i + 1) * cb];
        for (l, &av) in arow.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let brow = &b[l * cb..(l + 1) * cb];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
}

/// out += A^T B over A's rows: out[(i, j)] += A[(l, i)] B[(l, j)], with A
/// stored (ra x ca) and B (ra x cb) row-major.
pub(crate) fn matmul_tn_add(a: &[f64], ra: usize, ca: usize, b: &[f64], cb: usize, out: &mut [f64]) {
    debug_assert_eq!(a.len(), ra * ca);
    debug_assert_eq!(b.len(), ra * cb);
    debug_assert_eq!(out.len(), ca * cb);
    for l in 0..ra {
        let arow = &a[l * ca..(l + 1) * ca];
        let brow = &b[l * cb..(l + 1) * cb];
        for (i, &av) in arow.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let orow = &mut out[i * cb..(i + 1) * cb];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::PolygonalMesh;
    use crate::space::VemSpace;

    fn unit_square_space(k: usize) -> VemSpace {
        let mesh = PolygonalMesh::new(
            vec![
                Pt::new(0.0, 0.0),
                Pt::new(1.0, 0.0),
                Pt::new(1.0, 1.0),
                Pt::new(0.0, 1.0),
            ],
            vec![vec![0, 1, 2, 3]],
        )
        .unwrap();
        VemSpace::new(mesh, k).unwrap()
    }

    fn assemble_identity(space: &VemSpace, data: &ProblemData, s: &mut Scratch) {
        let map = MapDofs::identity(space);
        let vel = MapDofs::zeros(space.n_dofs());
        element_forms_gathered(space, 0, &map, &vel, data, 0.0, true, s).unwrap();
    }

    #[test]
    fn mass_total_equals_area_and_stiffness_kills_constants() {
        for k in 1..=3 {
            let space = unit_square_space(k);
            let data = ProblemData::diffusion_only(1.0);
            let mut s = Scratch::new();
            assemble_identity(&space, &data, &mut s);
            let nd = space.elems[0].nd;
            // the interpolant of 1, not the all-ones vector: moment dofs of
            // degree > 0 are zero
            let ones = local_dofs(&space, |_| 1.0);
            // 1^T M 1 = |E| exactly (stab vanishes on polynomial interpolants)
            let mut mv = vec![0.0; nd];
            matvec_square(&s.out_m, nd, &ones, &mut mv);
            let total: f64 = mv.iter().zip(&ones).map(|(a, b)| a * b).sum();
            assert!((total - 1.0).abs() < 1e-12, "k={k}: total mass {total}");
            // A 1 = 0
            matvec_square(&s.out_a, nd, &ones, &mut mv);
            for &v in &mv {
                assert!(v.abs() < 1e-12, "k={k}: stiffness on constants {v}");
            }
        }
    }

    #[test]
    fn stiffness_energy_of_linear_functions_under_affine_stretch() {
        // map (x, y) -> (2x, y); the image has area 2, so int |grad f|^2 of a
        // physical-linear f with unit gradient is 2
        for k in 1..=3 {
            let space = unit_square_space(k);
            let data = ProblemData::diffusion_only(1.0);
            let map = MapDofs::interpolate(&space, |p| Pt::new(2.0 * p.x, p.y));
            let vel = MapDofs::zeros(space.n_dofs());
            let mut s = Scratch::new();
            element_forms_gathered(&space, 0, &map, &vel, &data, 0.0, true, &mut s).unwrap();
            let nd = space.elems[0].nd;
            // v = interpolant of hat(x) = x composed with the map = 2 xi_1
            let v = local_dofs(&space, |p| 2.0 * p.x);
            let mut av = vec![0.0; nd];
            matvec_square(&s.out_a, nd, &v, &mut av);
            let energy: f64 = av.iter().zip(&v).map(|(a, b)| a * b).sum();
            assert!((energy - 2.0).abs() < 1e-11, "k={k}: energy {energy}");
            // mass of the constant 1 is the image area 2
            let ones = local_dofs(&space, |_| 1.0);
            matvec_square(&s.out_m, nd, &ones, &mut av);
            let total: f64 = av.iter().zip(&ones).map(|(a, b)| a * b).sum();
            assert!((total - 2.0).abs() < 1e-11, "k={k}: image area {total}");
        }
    }

    #[test]
    fn convection_row_sums_match_boundary_fluxes() {
        // identity map, w = 0, b = (1,1), k = 1: row i of B applied to the
        // constant 1 equals -b . bnd-int phi_i n ds, which is (1, 0, -1, 0)
        // on the unit square's corners.
        let space = unit_square_space(1);
        let data = ProblemData {
            mu: 0.0,
            b: Box::new(|_, _| Pt::new(1.0, 1.0)),
            f: Box::new(|_, _| 0.0),
        };
        let mut s = Scratch::new();
        assemble_identity(&space, &data, &mut s);
        let want = [1.0, 0.0, -1.0, 0.0];
        for i in 0..4 {
            let sum: f64 = s.out_b[i * 4..(i + 1) * 4].iter().sum();
            assert!(
                (sum - want[i]).abs() < 1e-13,
                "row {i}: {sum} vs {}",
                want[i]
            );
        }
    }

    #[test]
    fn transport_kernel_vanishes_when_mesh_velocity_equals_convection() {
        let space = unit_square_space(2);
        let data = ProblemData {
            mu: 0.0,
            b: Box::new(|_, _| Pt::new(0.7, -0.3)),
            f: Box::new(|_, _| 0.0),
        };
        let map = MapDofs::identity(&space);
        let vel = MapDofs::interpolate(&space, |_| Pt::new(0.7, -0.3));
        let mut s = Scratch::new();
        element_forms_gathered(&space, 0, &map, &vel, &data, 0.0, false, &mut s).unwrap();
        for &v in &s.out_b {
            assert!(v.abs() < 1e-14, "B should vanish, got {v}");
        }
    }

    #[test]
    fn degenerate_map_is_reported() {
        let space = unit_square_space(2);
        let data = ProblemData::diffusion_only(1.0);
        // fold the element onto a line
        let map = MapDofs::interpolate(&space, |p| Pt::new(p.x + p.y, p.x + p.y));
        let vel = MapDofs::zeros(space.n_dofs());
        let mut s = Scratch::new();
        let err =
            element_forms_gathered(&space, 0, &map, &vel, &data, 0.25, true, &mut s).unwrap_err();
        assert!(matches!(err, VemError::DegenerateMap { .. }), "{err}");
    }

    #[test]
    fn load_integrates_polynomials_exactly() {
        // f = x + 2y on the identity map: l[i] should reproduce
        // int f Pi0 phi_i; summing over a partition of unity gives int f = 1.5
        let space = unit_square_space(2);
        let data = ProblemData {
            mu: 1.0,
            b: Box::new(|_, _| Pt::ZERO),
            f: Box::new(|p, _| p.x + 2.0 * p.y),
        };
        let mut s = Scratch::new();
        assemble_identity(&space, &data, &mut s);
        // partition of unity: interpolant of 1 has all point dofs 1 and
        // moment dof 0 equal to 1 (mean of 1), higher moments ~ 0
        let ones = local_dofs(&space, |_| 1.0);
        let total: f64 = s.out_l.iter().zip(&ones).map(|(l, o)| l * o).sum();
        assert!((total - 1.5).abs() < 1e-13, "int f = {total}");
    }

    fn local_dofs(space: &VemSpace, f: impl Fn(Pt) -> f64) -> Vec<f64> {
        let global = space.interpolate(f);
        let mut local = Vec::new();
        space.gather(0, &global, &mut local);
        local
    }

    fn matvec_square(a: &[f64], n: usize, x: &[f64], out: &mut [f64]) {
        for i in 0..n {
            out[i] = a[i * n..(i + 1) * n]
                .iter()
                .zip(x)
                .map(|(m, v)| m * v)
                .sum();
        }
    }
}
