//! Velocity-based moving-mesh scheme for the porous medium equation
//! rho_t = div(rho grad rho) on a disk whose boundary travels with the flow.
//!
//! Each step works on the current map: a density-weighted potential solve
//! (grounded at one DoF, the potential only matters up to a constant)
//! recovers phi with grad phi equal to the
//! Darcy velocity -grad rho in the weighted weak sense; the mesh velocity is
//! the L2 projection of grad phi; the densities update conservatively against
//! the mass matrix of the advanced map; the map moves DoF-wise. The weak
//! variant leaves the boundary density free and conserves mass exactly; the
//! strong variant pins rho = 0 on the boundary and starts from a harmonic
//! isoparametric fit of the circle.

use crate::ale::forms::{
    element_forms_gathered, map_jacobians, matmul, matmul_tn_add, ProblemData, Scratch,
};
use crate::ale::{gather_pair, MapDofs};
use crate::geometry::Pt;
use crate::space::VemSpace;
use crate::sparse::{CholSolver, LuSolver, Pattern};
use crate::Result;

/// Self-similar source solution of rho_t = div(rho grad rho): a parabolic cap
/// of initial radius r0 spreading as lambda(t) = (t / t0)^(1/4).
#[derive(Debug, Clone, Copy)]
pub struct Similarity {
    pub r0: f64,
    pub t0: f64,
}

impl Similarity {
    pub fn new(r0: f64) -> Similarity {
        Similarity {
            r0,
            t0: r0 * r0 / 8.0,
        }
    }

    pub fn lambda(&self, t: f64) -> f64 {
        (t / self.t0).powf(0.25)
    }

    pub fn front_radius(&self, t: f64) -> f64 {
        self.r0 * self.lambda(t)
    }

    pub fn eval(&self, p: Pt, t: f64) -> f64 {
        let l = self.lambda(t);
        let rr = self.front_radius(t);
        let v = 1.0 - p.norm_sq() / (rr * rr);
        if v > 0.0 {
            v / (l * l)
        } else {
            0.0
        }
    }

    /// Total mass, invariant in time.
    pub fn mass(&self) -> f64 {
        std::f64::consts::PI * self.r0 * self.r0 / 2.0
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PmeOptions {
    pub strong_bc: bool,
    pub t0: f64,
    pub t_final: f64,
    /// Requested step; the actual step divides the span evenly.
    pub dt: f64,
    /// Floor for the elementwise stabilization weight.
    pub rho_floor: f64,
}

pub struct PmeResult {
    pub rho: Vec<f64>,
    pub map: MapDofs,
    pub t: f64,
    pub steps: usize,
    pub mass_initial: f64,
    pub mass_final: f64,
    /// Largest |mass(t) - mass(t0)| over the run.
    pub max_mass_drift: f64,
}

/// Initial map of the reference disk mesh: the identity for the weak variant,
/// a harmonic isoparametric fit for the strong one.
pub fn initial_map(space: &VemSpace, strong_bc: bool, r0: f64) -> Result<MapDofs> {
    if strong_bc {
        harmonic_boundary_fit(space, r0)
    } else {
        Ok(MapDofs::identity(space))
    }
}

/// Componentwise discrete-harmonic map whose boundary DoFs are projected
/// radially onto the circle of radius r0. Edge DoFs of order >= 2 sit on
/// chords of the reference mesh and move outward; the interior follows
/// harmonically (and stays put for k = 1, where x and y are reproduced
/// exactly).
fn harmonic_boundary_fit(space: &VemSpace, r0: f64) -> Result<MapDofs> {
    let layout = &space.layout;
    let n = layout.n_dofs;
    let bc = &layout.boundary;
    let pattern = Pattern::build(layout)?;
    let idm = MapDofs::identity(space);
    let vel = MapDofs::zeros(n);
    let data = ProblemData::diffusion_only(1.0);
    let mut s = Scratch::new();
    let mut avals = pattern.zeros();
    for ei in 0..space.elems.len() {
        element_forms_gathered(space, ei, &idm, &vel, &data, 0.0, false, &mut s)?;
        pattern.scatter_add(&mut avals, ei, &s.out_a, &layout.elem_dofs[ei], bc);
    }
    for d in 0..n {
        if bc[d] {
            pattern.set_diag(&mut avals, d, 1.0);
        }
    }
    let mut solver = LuSolver::new(&pattern, &avals)?;
    solver.factor(&pattern, &avals)?;
    let mut out = MapDofs::zeros(n);
    let mut rhs = vec![0.0; n];
    for comp in 0..2 {
        rhs.fill(0.0);
        for d in 0..layout.n_point_dofs {
            if bc[d] {
                let p = layout.node_pos[d];
                let g = p * (r0 / p.norm());
                rhs[d] = if comp == 0 { g.x } else { g.y };
            }
        }
        let sol = solver.solve(&rhs)?;
        if comp == 0 {
            out.x = sol;
        } else {
            out.y = sol;
        }
    }
    Ok(out)
}

/// Discrete mass carried by `rho` on the image of `map`.
pub fn discrete_mass(space: &VemSpace, map: &MapDofs, rho: &[f64]) -> Result<f64> {
    let mut s = Scratch::new();
    let mut ps = PmeScratch::default();
    let mut crow = vec![0.0; space.n_dofs()];
    for ei in 0..space.elems.len() {
        mass_element(space, ei, map, 0.0, &mut s, &mut ps)?;
        for (loc, &g) in space.layout.elem_dofs[ei].iter().enumerate() {
            crow[g] += ps.out_c[loc];
        }
    }
    Ok(crow.iter().zip(rho).map(|(c, r)| c * r).sum())
}

#[derive(Default)]
struct PmeScratch {
    lrho: Vec<f64>,
    lphi: Vec<f64>,
    lwx: Vec<f64>,
    lwy: Vec<f64>,
    ax: Vec<f64>,
    ay: Vec<f64>,
    c0: Vec<f64>,
    c1x: Vec<f64>,
    c1y: Vec<f64>,
    cwx: Vec<f64>,
    cwy: Vec<f64>,
    kxx: Vec<f64>,
    kxy: Vec<f64>,
    kyy: Vec<f64>,
    wmat: Vec<f64>,
    rvec: Vec<f64>,
    rvy: Vec<f64>,
    rx: Vec<f64>,
    ry: Vec<f64>,
    t1: Vec<f64>,
    t2: Vec<f64>,
    out_aw: Vec<f64>,
    out_m: Vec<f64>,
    out_d: Vec<f64>,
    out_b: Vec<f64>,
    out_c: Vec<f64>,
    out_rx: Vec<f64>,
    out_ry: Vec<f64>,
}

/// Weighted-stiffness element block and potential right-hand side. The
/// consistency part integrates max(Pi0 rho, 0) against pushed-forward
/// gradients; the right-hand side is minus that block applied to the local
/// density, before stabilization; the stabilization is scaled by the mean
/// element density floored away from zero.
fn potential_element(
    space: &VemSpace,
    ei: usize,
    map: &MapDofs,
    rho: &[f64],
    t: f64,
    floor: f64,
    s: &mut Scratch,
    ps: &mut PmeScratch,
) -> Result<()> {
    let el = &space.elems[ei];
    let (nk, n1, nd, nq) = (el.n_k, el.n_k1, el.nd, el.quad_pts.len());
    gather_pair(space, ei, map, &mut ps.ax, &mut ps.ay);
    map_jacobians(el, ei, t, &ps.ax, &ps.ay, s)?;
    space.gather(ei, rho, &mut ps.lrho);
    ps.c0.resize(nk, 0.0);
    ps.c1x.resize(n1, 0.0);
    ps.c1y.resize(n1, 0.0);
    el.pi0.matvec(&ps.lrho, &mut ps.c0);
    el.pi1x.matvec(&ps.lrho, &mut ps.c1x);
    el.pi1y.matvec(&ps.lrho, &mut ps.c1y);
    ps.kxx.clear();
    ps.kxx.resize(n1 * n1, 0.0);
    ps.kxy.clear();
    ps.kxy.resize(n1 * n1, 0.0);
    ps.kyy.clear();
    ps.kyy.resize(n1 * n1, 0.0);
    let mut num = 0.0;
    let mut den = 0.0;
    for q in 0..nq {
        let row = &el.mono_vals[q * nk..(q + 1) * nk];
        let wj = el.quad_wts[q] * s.jdet[q];
        let rho_q: f64 = ps.c0.iter().zip(row).map(|(c, m)| c * m).sum();
        let wjr = wj * rho_q.max(0.0);
        num += wjr;
        den += wj;
        let ji = s.jinv[q];
        let t11 = ji[0] * ji[0] + ji[1] * ji[1];
        let t12 = ji[0] * ji[2] + ji[1] * ji[3];
        let t22 = ji[2] * ji[2] + ji[3] * ji[3];
        for a in 0..n1 {
            let wa = wjr * row[a];
            for b in 0..n1 {
                let m = wa * row[b];
                ps.kxx[a * n1 + b] += t11 * m;
                ps.kxy[a * n1 + b] += t12 * m;
                ps.kyy[a * n1 + b] += t22 * m;
            }
        }
    }
    ps.out_aw.clear();
    ps.out_aw.resize(nd * nd, 0.0);
    ps.t1.clear();
    ps.t1.resize(n1 * nd, 0.0);
    matmul(&ps.kxx, n1, n1, &el.pi1x.a, nd, &mut ps.t1);
    matmul(&ps.kxy, n1, n1, &el.pi1y.a, nd, &mut ps.t1);
    matmul_tn_add(&el.pi1x.a, n1, nd, &ps.t1, nd, &mut ps.out_aw);
    ps.t1.clear();
    ps.t1.resize(n1 * nd, 0.0);
    matmul_tn_add(&ps.kxy, n1, n1, &el.pi1x.a, nd, &mut ps.t1);
    matmul(&ps.kyy, n1, n1, &el.pi1y.a, nd, &mut ps.t1);
    matmul_tn_add(&el.pi1y.a, n1, nd, &ps.t1, nd, &mut ps.out_aw);
    // rhs before stabilization: d = -A_cons rho
    ps.out_d.clear();
    ps.out_d.resize(nd, 0.0);
    for i in 0..nd {
        let mut acc = 0.0;
        for (a, &lr) in ps.lrho.iter().enumerate() {
            acc += ps.out_aw[i * nd + a] * lr;
        }
        ps.out_d[i] = -acc;
    }
    let rhobar = (num / den).max(floor);
    for (o, &sv) in ps.out_aw.iter_mut().zip(&el.stab.a) {
        *o += rhobar * sv;
    }
    Ok(())
}

/// Element right-hand sides of the velocity projection: the physical gradient
/// of the projected potential tested against Pi0 of each basis function.
fn gradient_rhs_element(
    space: &VemSpace,
    ei: usize,
    map: &MapDofs,
    phi: &[f64],
    t: f64,
    s: &mut Scratch,
    ps: &mut PmeScratch,
) -> Result<()> {
    let el = &space.elems[ei];
    let (nk, n1, nd, nq) = (el.n_k, el.n_k1, el.nd, el.quad_pts.len());
    gather_pair(space, ei, map, &mut ps.ax, &mut ps.ay);
    map_jacobians(el, ei, t, &ps.ax, &ps.ay, s)?;
    space.gather(ei, phi, &mut ps.lphi);
    ps.c1x.resize(n1, 0.0);
    ps.c1y.resize(n1, 0.0);
    el.pi1x.matvec(&ps.lphi, &mut ps.c1x);
    el.pi1y.matvec(&ps.lphi, &mut ps.c1y);
    ps.rvec.clear();
    ps.rvec.resize(nk, 0.0);
    ps.rvy.clear();
    ps.rvy.resize(nk, 0.0);
    for q in 0..nq {
        let row = &el.mono_vals[q * nk..(q + 1) * nk];
        let wj = el.quad_wts[q] * s.jdet[q];
        let r1 = &row[..n1];
        let gxr: f64 = ps.c1x.iter().zip(r1).map(|(c, m)| c * m).sum();
        let gyr: f64 = ps.c1y.iter().zip(r1).map(|(c, m)| c * m).sum();
        let ji = s.jinv[q];
        let gx = wj * (ji[0] * gxr + ji[2] * gyr);
        let gy = wj * (ji[1] * gxr + ji[3] * gyr);
        for (a, &mv) in row.iter().enumerate() {
            ps.rvec[a] += gx * mv;
            ps.rvy[a] += gy * mv;
        }
    }
    ps.out_rx.resize(nd, 0.0);
    ps.out_ry.resize(nd, 0.0);
    el.pi0.matvec_t(&ps.rvec, &mut ps.out_rx);
    el.pi0.matvec_t(&ps.rvy, &mut ps.out_ry);
    Ok(())
}

/// Element contribution of the conservative update: the weighted transport
/// residual rho (grad rho + w) tested against pushed-forward gradients.
#[allow(clippy::too_many_arguments)]
fn bvec_element(
    space: &VemSpace,
    ei: usize,
    map: &MapDofs,
    rho: &[f64],
    w: &MapDofs,
    t: f64,
    s: &mut Scratch,
    ps: &mut PmeScratch,
) -> Result<()> {
    let el = &space.elems[ei];
    let (nk, n1, nd, nq) = (el.n_k, el.n_k1, el.nd, el.quad_pts.len());
    gather_pair(space, ei, map, &mut ps.ax, &mut ps.ay);
    map_jacobians(el, ei, t, &ps.ax, &ps.ay, s)?;
    space.gather(ei, rho, &mut ps.lrho);
    gather_pair(space, ei, w, &mut ps.lwx, &mut ps.lwy);
    ps.c0.resize(nk, 0.0);
    ps.c1x.resize(n1, 0.0);
    ps.c1y.resize(n1, 0.0);
    ps.cwx.resize(nk, 0.0);
    ps.cwy.resize(nk, 0.0);
    el.pi0.matvec(&ps.lrho, &mut ps.c0);
    el.pi1x.matvec(&ps.lrho, &mut ps.c1x);
    el.pi1y.matvec(&ps.lrho, &mut ps.c1y);
    el.pi0.matvec(&ps.lwx, &mut ps.cwx);
    el.pi0.matvec(&ps.lwy, &mut ps.cwy);
    ps.rx.clear();
    ps.rx.resize(n1, 0.0);
    ps.ry.clear();
    ps.ry.resize(n1, 0.0);
    for q in 0..nq {
        let row = &el.mono_vals[q * nk..(q + 1) * nk];
        let wj = el.quad_wts[q] * s.jdet[q];
        let rho_q: f64 = ps.c0.iter().zip(row).map(|(c, m)| c * m).sum();
        let wjr = wj * rho_q.max(0.0);
        let r1 = &row[..n1];
        let gxr: f64 = ps.c1x.iter().zip(r1).map(|(c, m)| c * m).sum();
        let gyr: f64 = ps.c1y.iter().zip(r1).map(|(c, m)| c * m).sum();
        let ji = s.jinv[q];
        // physical gradient of rho plus the mesh velocity value
        let vx = ji[0] * gxr + ji[2] * gyr
            + ps.cwx.iter().zip(row).map(|(c, m)| c * m).sum::<f64>();
        let vy = ji[1] * gxr + ji[3] * gyr
            + ps.cwy.iter().zip(row).map(|(c, m)| c * m).sum::<f64>();
        // back to reference direction for the Pi1 contraction
        let sx = wjr * (ji[0] * vx + ji[1] * vy);
        let sy = wjr * (ji[2] * vx + ji[3] * vy);
        for (b, &mv) in r1.iter().enumerate() {
            ps.rx[b] += sx * mv;
            ps.ry[b] += sy * mv;
        }
    }
    ps.out_b.clear();
    ps.out_b.resize(nd, 0.0);
    ps.t1.resize(nd, 0.0);
    el.pi1x.matvec_t(&ps.rx, &mut ps.t1);
    for (o, &v) in ps.out_b.iter_mut().zip(&ps.t1) {
        *o += v;
    }
    el.pi1y.matvec_t(&ps.ry, &mut ps.t1);
    for (o, &v) in ps.out_b.iter_mut().zip(&ps.t1) {
        *o += v;
    }
    Ok(())
}

/// Mapped mass block and the element's share of the mass functional row.
fn mass_element(
    space: &VemSpace,
    ei: usize,
    map: &MapDofs,
    t: f64,
    s: &mut Scratch,
    ps: &mut PmeScratch,
) -> Result<()> {
    let el = &space.elems[ei];
    let (nk, nd, nq) = (el.n_k, el.nd, el.quad_pts.len());
    gather_pair(space, ei, map, &mut ps.ax, &mut ps.ay);
    map_jacobians(el, ei, t, &ps.ax, &ps.ay, s)?;
    ps.wmat.clear();
    ps.wmat.resize(nk * nk, 0.0);
    ps.rvec.clear();
    ps.rvec.resize(nk, 0.0);
    for q in 0..nq {
        let row = &el.mono_vals[q * nk..(q + 1) * nk];
        let wj = el.quad_wts[q] * s.jdet[q];
        for a in 0..nk {
            let wa = wj * row[a];
            ps.rvec[a] += wa;
            for b in a..nk {
                ps.wmat[a * nk + b] += wa * row[b];
            }
        }
    }
    for a in 0..nk {
        for b in 0..a {
            ps.wmat[a * nk + b] = ps.wmat[b * nk + a];
        }
    }
    ps.out_m.clear();
    ps.out_m.resize(nd * nd, 0.0);
    ps.t2.clear();
    ps.t2.resize(nk * nd, 0.0);
    matmul(&ps.wmat, nk, nk, &el.pi0.a, nd, &mut ps.t2);
    matmul_tn_add(&el.pi0.a, nk, nd, &ps.t2, nd, &mut ps.out_m);
    let h2 = el.h * el.h;
    for (o, &sv) in ps.out_m.iter_mut().zip(&el.stab.a) {
        *o += h2 * sv;
    }
    ps.out_c.resize(nd, 0.0);
    el.pi0.matvec_t(&ps.rvec, &mut ps.out_c);
    Ok(())
}

fn assemble_mass(
    space: &VemSpace,
    pattern: &Pattern,
    map: &MapDofs,
    t: f64,
    no_skip: &[bool],
    s: &mut Scratch,
    ps: &mut PmeScratch,
    mvals: &mut [f64],
    crow: &mut [f64],
) -> Result<()> {
    mvals.fill(0.0);
    crow.fill(0.0);
    for ei in 0..space.elems.len() {
        mass_element(space, ei, map, t, s, ps)?;
        let dofs = &space.layout.elem_dofs[ei];
        pattern.scatter_add(mvals, ei, &ps.out_m, dofs, no_skip);
        for (loc, &g) in dofs.iter().enumerate() {
            crow[g] += ps.out_c[loc];
        }
    }
    Ok(())
}

pub fn run_pme(
    space: &VemSpace,
    map_init: MapDofs,
    rho_init: Vec<f64>,
    opts: &PmeOptions,
) -> Result<PmeResult> {
    let layout = &space.layout;
    let n = layout.n_dofs;
    let bc = &layout.boundary;
    let span = opts.t_final - opts.t0;
    let n_steps = ((span / opts.dt).round() as usize).max(1);
    let dt = span / n_steps as f64;

    let pattern = Pattern::build(layout)?;
    let bc_positions = pattern.positions_in_rows(bc);
    let no_skip = vec![false; n];

    let mut s = Scratch::new();
    let mut ps = PmeScratch::default();

    let mut map = map_init;
    let mut rho = rho_init;
    if opts.strong_bc {
        for d in 0..n {
            if bc[d] {
                rho[d] = 0.0;
            }
        }
    }

    // ground the potential at the densest DoF; only grad phi is used, so the
    // arbitrary constant never enters the velocity
    let pin = rho
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut pin_skip = vec![false; n];
    pin_skip[pin] = true;

    let mut mvals = pattern.zeros();
    let mut crow = vec![0.0; n];
    assemble_mass(
        space, &pattern, &map, opts.t0, &no_skip, &mut s, &mut ps, &mut mvals, &mut crow,
    )?;
    let mut mass_solver = CholSolver::new(&pattern, &mvals)?;
    mass_solver.factor(&pattern, &mvals)?;
    let mut update_solver = CholSolver::new(&pattern, &mvals)?;
    let mut avals = pattern.zeros();
    let mut pot_solver = CholSolver::new(&pattern, &avals)?;

    let mass_initial: f64 = crow.iter().zip(&rho).map(|(c, r)| c * r).sum();
    let mut max_drift = 0.0f64;

    let mut dvec = vec![0.0; n];
    let mut rhs_x = vec![0.0; n];
    let mut rhs_y = vec![0.0; n];
    let mut bvec = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut gvals = pattern.zeros();

    for step in 0..n_steps {
        let t = opts.t0 + step as f64 * dt;

        // grounded potential solve, symmetric elimination of the pin
        avals.fill(0.0);
        dvec.fill(0.0);
        for ei in 0..space.elems.len() {
            potential_element(space, ei, &map, &rho, t, opts.rho_floor, &mut s, &mut ps)?;
            let dofs = &layout.elem_dofs[ei];
            pattern.scatter_add(&mut avals, ei, &ps.out_aw, dofs, &pin_skip);
            for (loc, &g) in dofs.iter().enumerate() {
                dvec[g] += ps.out_d[loc];
            }
        }
        for idx in pattern.col_positions(pin) {
            avals[idx] = 0.0;
        }
        pattern.set_diag(&mut avals, pin, 1.0);
        dvec[pin] = 0.0;
        pot_solver.factor(&pattern, &avals)?;
        let phi = pot_solver.solve(&dvec)?;

        // mesh velocity: L2 projection of grad phi
        rhs_x.fill(0.0);
        rhs_y.fill(0.0);
        for ei in 0..space.elems.len() {
            gradient_rhs_element(space, ei, &map, &phi, t, &mut s, &mut ps)?;
            for (loc, &g) in layout.elem_dofs[ei].iter().enumerate() {
                rhs_x[g] += ps.out_rx[loc];
                rhs_y[g] += ps.out_ry[loc];
            }
        }
        let w = MapDofs {
            x: mass_solver.solve(&rhs_x)?,
            y: mass_solver.solve(&rhs_y)?,
        };

        // conservative update right-hand side on the old map
        bvec.fill(0.0);
        for ei in 0..space.elems.len() {
            bvec_element(space, ei, &map, &rho, &w, t, &mut s, &mut ps)?;
            for (loc, &g) in layout.elem_dofs[ei].iter().enumerate() {
                bvec[g] += ps.out_b[loc];
            }
        }
        pattern.matvec(&mvals, &rho, &mut rhs);
        for (r, &b) in rhs.iter_mut().zip(&bvec) {
            *r -= dt * b;
        }

        // advance the map and rebuild the mass on it
        map.axpy(dt, &w);
        assemble_mass(
            space,
            &pattern,
            &map,
            t + dt,
            &no_skip,
            &mut s,
            &mut ps,
            &mut mvals,
            &mut crow,
        )?;
        mass_solver.factor(&pattern, &mvals)?;

        rho = if opts.strong_bc {
            // symmetric elimination; the boundary value is zero, so dropping
            // the columns changes nothing
            gvals.copy_from_slice(&mvals);
            for &p in &bc_positions {
                gvals[p as usize] = 0.0;
            }
            for d in 0..n {
                if bc[d] {
                    for idx in pattern.col_positions(d) {
                        gvals[idx] = 0.0;
                    }
                }
            }
            for d in 0..n {
                if bc[d] {
                    pattern.set_diag(&mut gvals, d, 1.0);
                    rhs[d] = 0.0;
                }
            }
            update_solver.factor(&pattern, &gvals)?;
            update_solver.solve(&rhs)?
        } else {
            mass_solver.solve(&rhs)?
        };

        let mass_now: f64 = crow.iter().zip(&rho).map(|(c, r)| c * r).sum();
        max_drift = max_drift.max((mass_now - mass_initial).abs());
    }

    let mass_final: f64 = crow.iter().zip(&rho).map(|(c, r)| c * r).sum();
    Ok(PmeResult {
        rho,
        map,
        t: opts.t_final,
        steps: n_steps,
        mass_initial,
        mass_final,
        max_mass_drift: max_drift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ale::interpolate_composed;
    use crate::analysis::mapped_area;
    use crate::mesh::voronoi::generate_cvt_disk;
    use std::f64::consts::PI;

    fn disk_space(cells: usize, k: usize, seed: u64, r: f64) -> VemSpace {
        let mesh = generate_cvt_disk(cells, 60, seed, r).unwrap();
        VemSpace::new(mesh, k).unwrap()
    }

    #[test]
    fn similarity_solution_satisfies_the_pde() {
        let sim = Similarity::new(0.5);
        assert!((sim.t0 - 0.03125).abs() < 1e-15);
        assert!((sim.front_radius(sim.t0) - 0.5).abs() < 1e-15);
        // finite differences inside the support, away from the front
        let t = sim.t0 * 1.3;
        let (ht, hx) = (1e-7, 1e-5);
        for &(x, y) in &[(0.05, 0.02), (-0.2, 0.1), (0.1, -0.25), (0.0, 0.0)] {
            let p = Pt::new(x, y);
            let rho_t = (sim.eval(p, t + ht) - sim.eval(p, t - ht)) / (2.0 * ht);
            // div(rho grad rho) = 0.5 * laplace(rho^2)
            let f = |dx: f64, dy: f64| sim.eval(Pt::new(x + dx, y + dy), t).powi(2);
            let lap = (f(hx, 0.0) + f(-hx, 0.0) + f(0.0, hx) + f(0.0, -hx) - 4.0 * f(0.0, 0.0))
                / (hx * hx);
            assert!(
                (rho_t - 0.5 * lap).abs() < 2e-4 * rho_t.abs().max(1.0),
                "pde residual at ({x}, {y}): {rho_t} vs {}",
                0.5 * lap
            );
        }
        // total mass: numeric polar integration matches the closed form
        let nr = 4000;
        let rr = sim.front_radius(t);
        let mut mass = 0.0;
        for i in 0..nr {
            let r = (i as f64 + 0.5) / nr as f64 * rr;
            mass += sim.eval(Pt::new(r, 0.0), t) * 2.0 * PI * r * (rr / nr as f64);
        }
        assert!((mass - sim.mass()).abs() < 1e-5, "mass {mass} vs {}", sim.mass());
        // front speed at t0 is r0 / (4 t0)
        let v = (sim.front_radius(sim.t0 + ht) - sim.front_radius(sim.t0 - ht)) / (2.0 * ht);
        assert!((v - 4.0).abs() < 1e-5, "front speed {v}");
    }

    #[test]
    fn harmonic_fit_is_identity_for_k1_and_curves_edges_for_k2() {
        let r0 = 0.5;
        let s1 = disk_space(24, 1, 4, r0);
        let m1 = initial_map(&s1, true, r0).unwrap();
        let id = MapDofs::identity(&s1);
        for i in 0..s1.n_dofs() {
            assert!((m1.x[i] - id.x[i]).abs() < 1e-10);
            assert!((m1.y[i] - id.y[i]).abs() < 1e-10);
        }

        let s2 = disk_space(24, 2, 4, r0);
        let m2 = initial_map(&s2, true, r0).unwrap();
        for d in 0..s2.layout.n_point_dofs {
            if s2.layout.boundary[d] {
                assert!((m2.point(d).norm() - r0).abs() < 1e-12);
            }
        }
        // the curved boundary recovers the disk area better than the polygon
        let disk = PI * r0 * r0;
        let poly_gap = (s2.mesh.domain_area - disk).abs();
        let curved_gap = (mapped_area(&s2, &m2).unwrap() - disk).abs();
        assert!(
            curved_gap < 0.1 * poly_gap,
            "curved {curved_gap:.2e} vs straight {poly_gap:.2e}"
        );
    }

    #[test]
    fn constant_density_does_not_move() {
        let space = disk_space(24, 2, 8, 0.5);
        let map0 = MapDofs::identity(&space);
        let rho0 = space.interpolate(|_| 0.7);
        let opts = PmeOptions {
            strong_bc: false,
            t0: 0.0,
            t_final: 3e-4,
            dt: 1e-4,
            rho_floor: 1e-12,
        };
        let res = run_pme(&space, map0.clone(), rho0.clone(), &opts).unwrap();
        let mut map_drift = 0.0f64;
        for i in 0..space.n_dofs() {
            map_drift = map_drift.max((res.map.x[i] - map0.x[i]).abs());
            map_drift = map_drift.max((res.map.y[i] - map0.y[i]).abs());
        }
        let rho_drift = res
            .rho
            .iter()
            .zip(&rho0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(map_drift < 1e-10, "map drift {map_drift:.3e}");
        assert!(rho_drift < 1e-10, "rho drift {rho_drift:.3e}");
    }

    #[test]
    fn boundary_moves_at_the_front_speed() {
        let sim = Similarity::new(0.5);
        let space = disk_space(96, 2, 12, sim.r0);
        let map0 = initial_map(&space, false, sim.r0).unwrap();
        let rho0 = interpolate_composed(&space, &map0, |p| sim.eval(p, sim.t0));
        let dt = 1e-5;
        let opts = PmeOptions {
            strong_bc: false,
            t0: sim.t0,
            t_final: sim.t0 + dt,
            dt,
            rho_floor: 1e-12,
        };
        let res = run_pme(&space, map0.clone(), rho0, &opts).unwrap();
        // exact front speed at t0 is 4; average the boundary point speeds
        let mut speed = 0.0;
        let mut count = 0;
        for d in 0..space.layout.n_point_dofs {
            if space.layout.boundary[d] {
                speed += (res.map.point(d) - map0.point(d)).norm() / dt;
                count += 1;
            }
        }
        speed /= count as f64;
        assert!(
            (speed - 4.0).abs() < 0.25,
            "mean boundary speed {speed:.4} (want ~4)"
        );
    }

    #[test]
    fn weak_variant_conserves_mass_to_roundoff() {
        let sim = Similarity::new(0.5);
        let space = disk_space(48, 2, 3, sim.r0);
        let map0 = initial_map(&space, false, sim.r0).unwrap();
        let rho0 = interpolate_composed(&space, &map0, |p| sim.eval(p, sim.t0));
        let opts = PmeOptions {
            strong_bc: false,
            t0: sim.t0,
            t_final: sim.t0 + 2e-3,
            dt: 1e-4,
            rho_floor: 1e-12,
        };
        let res = run_pme(&space, map0, rho0, &opts).unwrap();
        assert_eq!(res.steps, 20);
        assert!(
            res.max_mass_drift < 1e-10 * res.mass_initial.abs().max(1.0),
            "mass drift {:.3e}",
            res.max_mass_drift
        );
        // and the discrete mass is close to the continuous pi/8
        assert!((res.mass_initial - sim.mass()).abs() < 2e-3, "{}", res.mass_initial);
    }

    #[test]
    fn strong_variant_tracks_the_front() {
        let sim = Similarity::new(0.5);
        let space = disk_space(48, 2, 3, sim.r0);
        let map0 = initial_map(&space, true, sim.r0).unwrap();
        let rho0 = interpolate_composed(&space, &map0, |p| sim.eval(p, sim.t0));
        let t_final = sim.t0 + 2e-3;
        let opts = PmeOptions {
            strong_bc: true,
            t0: sim.t0,
            t_final,
            dt: 1e-4,
            rho_floor: 1e-12,
        };
        let res = run_pme(&space, map0, rho0, &opts).unwrap();
        let want = sim.front_radius(t_final);
        let moved = want - sim.r0;
        let err = crate::analysis::boundary_radius_error(&space, &res.map, want);
        assert!(
            err < 0.25 * moved,
            "front radius error {err:.3e} vs motion {moved:.3e}"
        );
        // density stays pinned at zero on the boundary
        for d in 0..space.layout.n_point_dofs {
            if space.layout.boundary[d] {
                assert!(res.rho[d].abs() < 1e-12);
            }
        }
    }
}
