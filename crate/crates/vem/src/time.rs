//! theta-scheme time stepping of convection-diffusion on a moving domain.
//!
//! Each step solves (M + dt theta C) rho_1 = (M + dt (theta - 1) C)|_{t_n} rho_0
//! + dt (theta l_1 + (1 - theta) l_0) with C = mu A + B, all forms evaluated on
//! the current map. Static maps factor the system matrix once and reassemble
//! only the load; moving maps refactor numerically per step on a cached
//! symbolic pattern. Dirichlet rows are replaced by identity equations.

use crate::ale::forms::{element_forms_gathered, map_jacobians, ProblemData, Scratch};
use crate::ale::{interpolate_composed, interpolate_composed_map, MapDofs, Motion};
use crate::geometry::Pt;
use crate::space::VemSpace;
use crate::sparse::{LuSolver, Pattern};
use crate::Result;

#[derive(Debug, Clone, Copy)]
pub struct TimeGrid {
    /// theta = 1/2 is Crank-Nicolson, theta = 1 implicit Euler.
    pub theta: f64,
    pub t0: f64,
    pub t_final: f64,
    /// Requested step; the actual step divides the span evenly.
    pub dt: f64,
}

impl TimeGrid {
    pub fn n_steps(&self) -> usize {
        (((self.t_final - self.t0) / self.dt).round() as usize).max(1)
    }

    pub fn dt_eff(&self) -> f64 {
        (self.t_final - self.t0) / self.n_steps() as f64
    }
}

pub struct CdResult {
    pub rho: Vec<f64>,
    /// Discrete map at the final time; composes errors and exports.
    pub map: MapDofs,
    pub t: f64,
    pub steps: usize,
    pub dt: f64,
}

struct FormSet {
    m: Vec<f64>,
    c: Vec<f64>,
    l: Vec<f64>,
}

impl FormSet {
    fn new(nnz: usize, n: usize) -> FormSet {
        FormSet {
            m: vec![0.0; nnz],
            c: vec![0.0; nnz],
            l: vec![0.0; n],
        }
    }
}

fn assemble(
    space: &VemSpace,
    pattern: &Pattern,
    map: &MapDofs,
    vel: &MapDofs,
    data: &ProblemData,
    t: f64,
    bc: &[bool],
    s: &mut Scratch,
    out: &mut FormSet,
) -> Result<()> {
    out.m.fill(0.0);
    out.c.fill(0.0);
    out.l.fill(0.0);
    for ei in 0..space.elems.len() {
        element_forms_gathered(space, ei, map, vel, data, t, true, s)?;
        let nd = space.elems[ei].nd;
        for i in 0..nd * nd {
            s.out_a[i] = data.mu * s.out_a[i] + s.out_b[i];
        }
        let dofs = &space.layout.elem_dofs[ei];
        pattern.scatter_add(&mut out.m, ei, &s.out_m, dofs, bc);
        pattern.scatter_add(&mut out.c, ei, &s.out_a, dofs, bc);
        for (loc, &g) in dofs.iter().enumerate() {
            if !bc[g] {
                out.l[g] += s.out_l[loc];
            }
        }
    }
    Ok(())
}

/// Per-element physical quadrature data frozen for a static map.
struct LoadCache {
    phys: Vec<Pt>,
    wj: Vec<f64>,
}

fn build_load_cache(space: &VemSpace, map: &MapDofs, s: &mut Scratch) -> Result<Vec<LoadCache>> {
    let mut out = Vec::with_capacity(space.elems.len());
    let mut ax = Vec::new();
    let mut ay = Vec::new();
    for (ei, el) in space.elems.iter().enumerate() {
        ax.clear();
        ay.clear();
        for &g in &space.layout.elem_dofs[ei] {
            ax.push(map.x[g]);
            ay.push(map.y[g]);
        }
        map_jacobians(el, ei, 0.0, &ax, &ay, s)?;
        out.push(LoadCache {
            phys: s.phys.clone(),
            wj: el
                .quad_wts
                .iter()
                .zip(&s.jdet)
                .map(|(w, j)| w * j)
                .collect(),
        });
    }
    Ok(out)
}

fn load_only(
    space: &VemSpace,
    cache: &[LoadCache],
    data: &ProblemData,
    t: f64,
    bc: &[bool],
    out: &mut [f64],
) {
    out.fill(0.0);
    let mut rvec = Vec::new();
    let mut lel = Vec::new();
    for (ei, el) in space.elems.iter().enumerate() {
        let ca = &cache[ei];
        let nk = el.n_k;
        rvec.clear();
        rvec.resize(nk, 0.0);
        for (q, (&wj, &xq)) in ca.wj.iter().zip(&ca.phys).enumerate() {
            let fv = wj * (data.f)(xq, t);
            let row = &el.mono_vals[q * nk..(q + 1) * nk];
            for (r, &mv) in rvec.iter_mut().zip(row) {
                *r += fv * mv;
            }
        }
        lel.resize(el.nd, 0.0);
        el.pi0.matvec_t(&rvec, &mut lel);
        for (loc, &g) in space.layout.elem_dofs[ei].iter().enumerate() {
            if !bc[g] {
                out[g] += lel[loc];
            }
        }
    }
}

fn motion_state_at(space: &VemSpace, motion: &Motion, t: f64) -> (MapDofs, MapDofs) {
    match motion {
        Motion::Static(f) => (
            MapDofs::interpolate(space, |p| f(p)),
            MapDofs::zeros(space.n_dofs()),
        ),
        Motion::Analytic { map, velocity } => (
            MapDofs::interpolate(space, |p| map(p, t)),
            MapDofs::interpolate(space, |p| velocity(p, t)),
        ),
        // a spatial velocity field starts from the reference configuration
        Motion::SpatialVelocity(u) => (
            MapDofs::identity(space),
            MapDofs::interpolate(space, |p| u(p, t)),
        ),
    }
}

/// One Heun step of the map under a spatial velocity field: predict with the
/// current velocity, correct with the field sampled on the predicted image,
/// then refresh the velocity on the final image.
pub fn advance_map_heun(
    space: &VemSpace,
    map0: &MapDofs,
    vel0: &MapDofs,
    u: &dyn Fn(Pt, f64) -> Pt,
    t1: f64,
    dt: f64,
) -> (MapDofs, MapDofs) {
    let mut mid = map0.clone();
    mid.axpy(dt, vel0);
    let vel_mid = interpolate_composed_map(space, &mid, |x| u(x, t1));
    let mut map1 = map0.clone();
    map1.axpy(0.5 * dt, vel0);
    map1.axpy(0.5 * dt, &vel_mid);
    let vel1 = interpolate_composed_map(space, &map1, |x| u(x, t1));
    (map1, vel1)
}

pub fn run_convection_diffusion(
    space: &VemSpace,
    motion: &Motion,
    data: &ProblemData,
    dirichlet: &dyn Fn(Pt, f64) -> f64,
    initial: &dyn Fn(Pt) -> f64,
    grid: &TimeGrid,
) -> Result<CdResult> {
    run_convection_diffusion_observed(space, motion, data, dirichlet, initial, grid, &mut |_, _, _| {})
}

/// Like [`run_convection_diffusion`], additionally calling `observe(t, rho,
/// map)` on the initial state and after every accepted step.
#[allow(clippy::too_many_arguments)]
pub fn run_convection_diffusion_observed(
    space: &VemSpace,
    motion: &Motion,
    data: &ProblemData,
    dirichlet: &dyn Fn(Pt, f64) -> f64,
    initial: &dyn Fn(Pt) -> f64,
    grid: &TimeGrid,
    observe: &mut dyn FnMut(f64, &[f64], &MapDofs),
) -> Result<CdResult> {
    let n = space.n_dofs();
    let bc = &space.layout.boundary;
    let n_steps = grid.n_steps();
    let dt = grid.dt_eff();
    let th = grid.theta;

    let pattern = Pattern::build(&space.layout)?;
    let (mut map0, mut vel0) = motion_state_at(space, motion, grid.t0);
    let mut rho = interpolate_composed(space, &map0, |x| initial(x));

    let mut s = Scratch::new();
    let mut f0 = FormSet::new(pattern.nnz, n);
    let mut f1 = FormSet::new(pattern.nnz, n);
    assemble(space, &pattern, &map0, &vel0, data, grid.t0, bc, &mut s, &mut f0)?;

    let mut gvals = pattern.zeros();
    let mut hvals = pattern.zeros();
    let mut rhs = vec![0.0; n];
    let mut solver = LuSolver::new(&pattern, &gvals)?;

    observe(grid.t0, &rho, &map0);

    if motion.is_static() {
        for i in 0..pattern.nnz {
            gvals[i] = f0.m[i] + dt * th * f0.c[i];
            hvals[i] = f0.m[i] + dt * (th - 1.0) * f0.c[i];
        }
        for d in 0..n {
            if bc[d] {
                pattern.set_diag(&mut gvals, d, 1.0);
            }
        }
        solver.factor(&pattern, &gvals)?;
        let cache = build_load_cache(space, &map0, &mut s)?;
        let mut l0 = f0.l.clone();
        let mut l1 = vec![0.0; n];
        for step in 0..n_steps {
            let t1 = grid.t0 + (step + 1) as f64 * dt;
            load_only(space, &cache, data, t1, bc, &mut l1);
            pattern.matvec(&hvals, &rho, &mut rhs);
            for i in 0..n {
                rhs[i] += dt * (th * l1[i] + (1.0 - th) * l0[i]);
            }
            for d in 0..n {
                if bc[d] {
                    rhs[d] = dirichlet(map0.point(d), t1);
                }
            }
            rho = solver.solve(&rhs)?;
            std::mem::swap(&mut l0, &mut l1);
            observe(t1, &rho, &map0);
        }
        return Ok(CdResult {
            rho,
            map: map0,
            t: grid.t_final,
            steps: n_steps,
            dt,
        });
    }

    for step in 0..n_steps {
        let t1 = grid.t0 + (step + 1) as f64 * dt;
        let (map1, vel1) = match motion {
            Motion::Static(_) => unreachable!(),
            Motion::Analytic { map, velocity } => (
                MapDofs::interpolate(space, |p| map(p, t1)),
                MapDofs::interpolate(space, |p| velocity(p, t1)),
            ),
            Motion::SpatialVelocity(u) => {
                advance_map_heun(space, &map0, &vel0, u.as_ref(), t1, dt)
            }
        };
        assemble(space, &pattern, &map1, &vel1, data, t1, bc, &mut s, &mut f1)?;
        for i in 0..pattern.nnz {
            gvals[i] = f1.m[i] + dt * th * f1.c[i];
            hvals[i] = f0.m[i] + dt * (th - 1.0) * f0.c[i];
        }
        pattern.matvec(&hvals, &rho, &mut rhs);
        for i in 0..n {
            rhs[i] += dt * (th * f1.l[i] + (1.0 - th) * f0.l[i]);
        }
        for d in 0..n {
            if bc[d] {
                pattern.set_diag(&mut gvals, d, 1.0);
                rhs[d] = dirichlet(map1.point(d), t1);
            }
        }
        solver.factor(&pattern, &gvals)?;
        rho = solver.solve(&rhs)?;
        std::mem::swap(&mut f0, &mut f1);
        map0 = map1;
        vel0 = vel1;
        observe(t1, &rho, &map0);
    }
    Ok(CdResult {
        rho,
        map: map0,
        t: grid.t_final,
        steps: n_steps,
        dt,
    })
}
