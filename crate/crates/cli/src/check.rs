//! Self-contained consistency checks behind the `check` verb. Each check
//! compares the library against an oracle computed here from first
//! principles (divergence-theorem integrals, static reassembly, exact
//! invariants), so a pass means the assembled pieces agree with independent
//! arithmetic, not with themselves.

use crate::presets::{self, Preset};
use anyhow::{anyhow, bail, Result};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vem::ale::forms::{element_forms_gathered, map_jacobians, ProblemData, Scratch};
use vem::ale::{interpolate_composed, MapDofs, Motion};
use vem::mesh::voronoi;
use vem::pme::{self, PmeOptions, Similarity};
use vem::quadrature::{gauss_legendre, polygon_quadrature};
use vem::space::VemSpace;
use vem::time::{advance_map_heun, run_convection_diffusion, TimeGrid};
use vem::Pt;

pub struct CheckOutcome {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

pub fn run_checks() -> Vec<CheckOutcome> {
    let checks: [(&'static str, fn() -> Result<String>); 8] = [
        ("projector-reproduction", check_projectors),
        ("quadrature-exactness", check_quadrature),
        ("form-symmetry", check_form_symmetry),
        ("identity-reduction", check_identity_reduction),
        ("map-positivity", check_map_positivity),
        ("heun-order", check_heun_order),
        ("pure-transport", check_pure_transport),
        ("pme-mass", check_pme_mass),
    ];
    checks
        .into_iter()
        .map(|(name, f)| match f() {
            Ok(detail) => CheckOutcome {
                name,
                pass: true,
                detail,
            },
            Err(e) => CheckOutcome {
                name,
                pass: false,
                detail: format!("{e:#}"),
            },
        })
        .collect()
}

fn square_space(cells: usize, k: usize, seed: u64) -> Result<VemSpace> {
    let mesh = voronoi::generate_cvt(cells, 60, seed)?;
    Ok(VemSpace::new(mesh, k)?)
}

/// Pi0 and Pinabla applied to the interpolant of a degree <= k polynomial
/// must give back the polynomial at every volume quadrature point.
fn check_projectors() -> Result<String> {
    let mut worst = 0.0f64;
    for k in 1..=3 {
        let space = square_space(64, k, 2)?;
        // one polynomial with every monomial of total degree <= k present
        let poly = move |p: Pt| -> f64 {
            let mut val = 0.0;
            let mut ci = 0.0;
            for d in 0..=k as i32 {
                for ax in (0..=d).rev() {
                    ci += 1.0;
                    val += (0.37 * ci - 0.9) * p.x.powi(ax) * p.y.powi(d - ax);
                }
            }
            val
        };
        let global = space.interpolate(poly);
        let mut local = Vec::new();
        let mut coef = Vec::new();
        for (ei, el) in space.elems.iter().enumerate() {
            space.gather(ei, &global, &mut local);
            for proj in [&el.pi0, &el.pinabla] {
                coef.resize(el.n_k, 0.0);
                proj.matvec(&local, &mut coef);
                for (q, &pt) in el.quad_pts.iter().enumerate() {
                    let row = &el.mono_vals[q * el.n_k..(q + 1) * el.n_k];
                    let got: f64 = coef.iter().zip(row).map(|(c, m)| c * m).sum();
                    let want = poly(pt);
                    worst = worst.max((got - want).abs() / (1.0 + want.abs()));
                }
            }
        }
    }
    if worst > 1e-9 {
        bail!("projection of a polynomial drifts by {worst:.2e}");
    }
    Ok(format!("max relative drift {worst:.2e} (k=1..3)"))
}

/// Divergence-theorem edge integral of x^a y^b over a polygon, using a 1D
/// Gauss rule well above the needed degree. Independent of the library's
/// triangle-fan volume rule.
fn monomial_integral_oracle(verts: &[Pt], a: i32, b: i32) -> f64 {
    let (nodes, wts) = gauss_legendre(9);
    let n = verts.len();
    let mut total = 0.0;
    for i in 0..n {
        let p0 = verts[i];
        let p1 = verts[(i + 1) % n];
        for (&xi, &w) in nodes.iter().zip(&wts) {
            let s = 0.5 * (xi + 1.0);
            let x = p0.x + s * (p1.x - p0.x);
            let y = p0.y + s * (p1.y - p0.y);
            // F = (x^{a+1} y^b / (a+1), 0), n ds = (dy, -dx)
            total += 0.5 * w * x.powi(a + 1) * y.powi(b) / (a as f64 + 1.0) * (p1.y - p0.y);
        }
    }
    total
}

fn check_quadrature() -> Result<String> {
    let verts = [
        Pt::new(0.03, 0.02),
        Pt::new(1.10, -0.05),
        Pt::new(1.42, 0.83),
        Pt::new(0.61, 1.21),
        Pt::new(-0.12, 0.77),
    ];
    let mut worst = 0.0f64;
    for order in [4usize, 6, 8] {
        let rule = polygon_quadrature(&verts, order)?;
        for d in 0..=order as i32 {
            for a in 0..=d {
                let b = d - a;
                let got = rule.integrate(|p| p.x.powi(a) * p.y.powi(b));
                let want = monomial_integral_oracle(&verts, a, b);
                worst = worst.max((got - want).abs() / want.abs().max(1.0));
            }
        }
    }
    if worst > 1e-12 {
        bail!("polygon rule misses a monomial by {worst:.2e}");
    }
    Ok(format!("orders 4/6/8 vs edge-integral oracle, max {worst:.2e}"))
}

fn static_map_dofs(space: &VemSpace, motion: &Motion) -> Result<MapDofs> {
    match motion {
        Motion::Static(f) => Ok(MapDofs::interpolate(space, |p| f(p))),
        _ => Err(anyhow!("expected a static motion")),
    }
}

/// Mass must be symmetric positive definite and stiffness symmetric positive
/// semidefinite with constants in its kernel, on a genuinely curved map.
fn check_form_symmetry() -> Result<String> {
    let space = square_space(100, 2, 7)?;
    let Some(Preset::Cd(p)) = presets::lookup("ce_static") else {
        bail!("ce_static preset missing");
    };
    let map = static_map_dofs(&space, &(p.motion)(0.01))?;
    let vel = MapDofs::zeros(space.n_dofs());
    let data = ProblemData::diffusion_only(1.0);
    let ones = space.interpolate(|_| 1.0);

    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut s = Scratch::new();
    let mut local_ones = Vec::new();
    let mut min_quad = f64::INFINITY;
    let mut worst_asym = 0.0f64;
    let mut worst_neg = 0.0f64;
    let mut worst_const = 0.0f64;
    for ei in 0..space.elems.len() {
        element_forms_gathered(&space, ei, &map, &vel, &data, 0.0, false, &mut s)?;
        let nd = space.elems[ei].nd;
        let scale_m = s.out_m.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let scale_a = s.out_a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..nd {
            for j in (i + 1)..nd {
                worst_asym = worst_asym
                    .max((s.out_m[i * nd + j] - s.out_m[j * nd + i]).abs() / scale_m)
                    .max((s.out_a[i * nd + j] - s.out_a[j * nd + i]).abs() / scale_a);
            }
        }
        for _ in 0..2 {
            let x: Vec<f64> = (0..nd).map(|_| rng.random_range(-1.0..1.0)).collect();
            let qm = quad_form(&s.out_m, nd, &x);
            let qa = quad_form(&s.out_a, nd, &x);
            min_quad = min_quad.min(qm / scale_m);
            if qa < 0.0 {
                worst_neg = worst_neg.max(-qa / scale_a);
            }
        }
        space.gather(ei, &ones, &mut local_ones);
        for i in 0..nd {
            let row: f64 = s.out_a[i * nd..(i + 1) * nd]
                .iter()
                .zip(&local_ones)
                .map(|(a, o)| a * o)
                .sum();
            worst_const = worst_const.max(row.abs() / scale_a);
        }
    }
    if worst_asym > 1e-12 {
        bail!("element form asymmetry {worst_asym:.2e}");
    }
    if min_quad <= 0.0 {
        bail!("mass quadratic form not positive: {min_quad:.2e}");
    }
    if worst_neg > 1e-10 {
        bail!("stiffness quadratic form negative by {worst_neg:.2e}");
    }
    if worst_const > 1e-10 {
        bail!("stiffness does not kill constants: {worst_const:.2e}");
    }
    Ok(format!(
        "asym {worst_asym:.1e}, min x'Mx {min_quad:.1e}, A*1 {worst_const:.1e}"
    ))
}

fn quad_form(a: &[f64], n: usize, x: &[f64]) -> f64 {
    let mut total = 0.0;
    for i in 0..n {
        let row = &a[i * n..(i + 1) * n];
        let ri: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
        total += x[i] * ri;
    }
    total
}

/// On the identity map the ALE element forms must agree entrywise with a
/// static assembly computed here from the projectors and quadrature alone.
fn check_identity_reduction() -> Result<String> {
    let bvec = Pt::new(0.7, -0.3);
    let data = ProblemData {
        mu: 1.0,
        b: Box::new(move |_, _| bvec),
        f: Box::new(|p, _| 0.3 + p.x - 2.0 * p.y),
    };
    let mut worst = 0.0f64;
    for k in [2usize, 3] {
        let space = square_space(64, k, 3)?;
        let map = MapDofs::identity(&space);
        let vel = MapDofs::zeros(space.n_dofs());
        let mut s = Scratch::new();
        for (ei, el) in space.elems.iter().enumerate() {
            element_forms_gathered(&space, ei, &map, &vel, &data, 0.0, true, &mut s)?;
            let (nd, nk, n1) = (el.nd, el.n_k, el.n_k1);

            // monomial Gram from the element's own points and weights
            let mut gram = vec![0.0; nk * nk];
            let mut load_mono = vec![0.0; nk];
            for q in 0..el.quad_pts.len() {
                let row = &el.mono_vals[q * nk..(q + 1) * nk];
                let w = el.quad_wts[q];
                for a in 0..nk {
                    for b in 0..nk {
                        gram[a * nk + b] += w * row[a] * row[b];
                    }
                    load_mono[a] += w * (data.f)(el.quad_pts[q], 0.0) * row[a];
                }
            }

            let h2 = el.h * el.h;
            for i in 0..nd {
                for j in 0..nd {
                    let mut m_ref = h2 * el.stab.at(i, j);
                    let mut a_ref = el.stab.at(i, j);
                    let mut b_ref = 0.0;
                    for a in 0..nk {
                        for b in 0..nk {
                            let g = gram[a * nk + b];
                            m_ref += el.pi0.at(a, i) * g * el.pi0.at(b, j);
                            if a < n1 && b < n1 {
                                a_ref += g
                                    * (el.pi1x.at(a, i) * el.pi1x.at(b, j)
                                        + el.pi1y.at(a, i) * el.pi1y.at(b, j));
                            }
                            if a < n1 {
                                // transport direction is -b on the identity map
                                b_ref -= g
                                    * (bvec.x * el.pi1x.at(a, i) + bvec.y * el.pi1y.at(a, i))
                                    * el.pi0.at(b, j);
                            }
                        }
                    }
                    worst = worst
                        .max((s.out_m[i * nd + j] - m_ref).abs() / (1.0 + m_ref.abs()))
                        .max((s.out_a[i * nd + j] - a_ref).abs() / (1.0 + a_ref.abs()))
                        .max((s.out_b[i * nd + j] - b_ref).abs() / (1.0 + b_ref.abs()));
                }
                let l_ref: f64 = (0..nk).map(|a| el.pi0.at(a, i) * load_mono[a]).sum();
                worst = worst.max((s.out_l[i] - l_ref).abs() / (1.0 + l_ref.abs()));
            }
        }
    }
    if worst > 1e-11 {
        bail!("ALE forms on the identity map differ from static assembly by {worst:.2e}");
    }
    Ok(format!("max entry mismatch {worst:.2e} (k=2,3)"))
}

fn min_jdet(space: &VemSpace, map: &MapDofs, t: f64, s: &mut Scratch) -> Result<f64> {
    let mut ax = Vec::new();
    let mut ay = Vec::new();
    let mut min_j = f64::INFINITY;
    for (ei, el) in space.elems.iter().enumerate() {
        ax.clear();
        ay.clear();
        for &g in &space.layout.elem_dofs[ei] {
            ax.push(map.x[g]);
            ay.push(map.y[g]);
        }
        map_jacobians(el, ei, t, &ax, &ay, s)?;
        for &j in &s.jdet {
            min_j = min_j.min(j);
        }
    }
    Ok(min_j)
}

/// Every preset motion must keep the map Jacobian positive over the run span.
fn check_map_positivity() -> Result<String> {
    let t_final = 0.01;
    let space = square_space(100, 2, 5)?;
    let mut s = Scratch::new();
    let mut global_min = f64::INFINITY;
    for name in [
        "ce_static",
        "warped_square",
        "ce_linear",
        "vorticial",
        "oscillating",
    ] {
        let Some(Preset::Cd(p)) = presets::lookup(name) else {
            bail!("preset {name} missing");
        };
        let motion = (p.motion)(t_final);
        let mut preset_min = f64::INFINITY;
        match &motion {
            Motion::Static(f) => {
                let map = MapDofs::interpolate(&space, |p| f(p));
                preset_min = min_jdet(&space, &map, 0.0, &mut s)?;
            }
            Motion::Analytic { map, .. } => {
                for i in 0..=4 {
                    let t = t_final * i as f64 / 4.0;
                    let m = MapDofs::interpolate(&space, |p| map(p, t));
                    preset_min = preset_min.min(min_jdet(&space, &m, t, &mut s)?);
                }
            }
            Motion::SpatialVelocity(u) => {
                let steps = 20;
                let dt = t_final / steps as f64;
                let mut map = MapDofs::identity(&space);
                let mut vel = MapDofs::interpolate(&space, |p| u(p, 0.0));
                preset_min = preset_min.min(min_jdet(&space, &map, 0.0, &mut s)?);
                for n in 0..steps {
                    let t1 = dt * (n + 1) as f64;
                    (map, vel) = advance_map_heun(&space, &map, &vel, u, t1, dt);
                    preset_min = preset_min.min(min_jdet(&space, &map, t1, &mut s)?);
                }
            }
        }
        if !(preset_min > 0.0) {
            bail!("{name}: Jacobian determinant reaches {preset_min:.3e}");
        }
        global_min = global_min.min(preset_min);
    }
    Ok(format!("min det J {global_min:.3} across 5 motions"))
}

/// Halving the step of the Heun map update must cut the error by about 4.
fn check_heun_order() -> Result<String> {
    let space = square_space(64, 2, 11)?;
    let u = |p: Pt, t: f64| {
        Pt::new(
            0.2 * (std::f64::consts::PI * p.x).sin()
                * (std::f64::consts::PI * p.y).cos()
                * (1.0 + 0.5 * (3.0 * t).sin()),
            -0.2 * (std::f64::consts::PI * p.x).cos()
                * (std::f64::consts::PI * p.y).sin()
                * (1.0 + 0.5 * (2.0 * t).cos()),
        )
    };
    let t_final = 0.1;
    let march = |steps: usize| -> MapDofs {
        let dt = t_final / steps as f64;
        let mut map = MapDofs::identity(&space);
        let mut vel = MapDofs::interpolate(&space, |p| u(p, 0.0));
        for n in 0..steps {
            let t1 = dt * (n + 1) as f64;
            (map, vel) = advance_map_heun(&space, &map, &vel, &u, t1, dt);
        }
        map
    };
    let reference = march(160);
    let err = |m: &MapDofs| -> f64 {
        let ex = m
            .x
            .iter()
            .zip(&reference.x)
            .fold(0.0f64, |a, (p, q)| a.max((p - q).abs()));
        let ey = m
            .y
            .iter()
            .zip(&reference.y)
            .fold(0.0f64, |a, (p, q)| a.max((p - q).abs()));
        ex.max(ey)
    };
    let e10 = err(&march(10));
    let e20 = err(&march(20));
    let ratio = e10 / e20;
    if !(3.2..=4.8).contains(&ratio) {
        bail!("error ratio {ratio:.2} under step halving, expected about 4");
    }
    Ok(format!("error ratio {ratio:.2} under step halving"))
}

/// With the convection field equal to the (spatially constant) mesh velocity
/// and no diffusion, the ALE transport term cancels and the DoF vector must
/// stay put while the mesh translates underneath.
fn check_pure_transport() -> Result<String> {
    let space = square_space(100, 2, 5)?;
    let Some(Preset::Cd(p)) = presets::lookup("oscillating") else {
        bail!("oscillating preset missing");
    };
    let t_final = 0.01;
    let motion = (p.motion)(t_final);
    // a second instance of the same motion supplies the closed forms for the
    // convection field and the transported boundary data
    let Motion::Analytic { map, velocity } = (p.motion)(t_final) else {
        bail!("oscillating motion is not analytic");
    };
    let data = ProblemData {
        mu: 0.0,
        b: Box::new(move |_, t| velocity(Pt::ZERO, t)),
        f: Box::new(|_, _| 0.0),
    };
    let psi =
        |x: f64, y: f64| (std::f64::consts::PI * x / 2.0).sin() * (std::f64::consts::PI * y).sin();
    let dirichlet = move |x: Pt, t: f64| {
        // the motion translates the t = 0 configuration rigidly in time
        let now = map(Pt::ZERO, t);
        let base = map(Pt::ZERO, 0.0);
        psi(x.x - (now.x - base.x), x.y - (now.y - base.y))
    };
    let initial = move |x: Pt| psi(x.x, x.y);
    let grid = TimeGrid {
        theta: 0.5,
        t0: 0.0,
        t_final,
        dt: 1e-3,
    };
    let res = run_convection_diffusion(&space, &motion, &data, &dirichlet, &initial, &grid)?;
    let map0 = match &motion {
        Motion::Analytic { map, .. } => MapDofs::interpolate(&space, |p| map(p, 0.0)),
        _ => unreachable!(),
    };
    let rho0 = interpolate_composed(&space, &map0, |x| psi(x.x, x.y));
    let drift = res
        .rho
        .iter()
        .zip(&rho0)
        .fold(0.0f64, |a, (p, q)| a.max((p - q).abs()));
    if drift > 1e-10 {
        bail!("DoFs drift by {drift:.2e} under pure transport");
    }
    Ok(format!("max DoF drift {drift:.2e} over {} steps", res.steps))
}

/// The weak-form PME update conserves discrete mass by construction.
fn check_pme_mass() -> Result<String> {
    let mesh = voronoi::generate_cvt_disk(48, 60, 9, 0.5)?;
    let space = VemSpace::new(mesh, 2)?;
    let sim = Similarity::new(0.5);
    let opts = PmeOptions {
        strong_bc: false,
        t0: sim.t0,
        t_final: sim.t0 + 3e-3,
        dt: 1e-4,
        rho_floor: 1e-12,
    };
    let map0 = pme::initial_map(&space, false, 0.5)?;
    let rho0 = interpolate_composed(&space, &map0, |x| sim.eval(x, sim.t0));
    let res = pme::run_pme(&space, map0, rho0, &opts)?;
    let rel = res.max_mass_drift / res.mass_initial.abs();
    if rel > 1e-10 {
        bail!("relative mass drift {rel:.2e} over {} steps", res.steps);
    }
    Ok(format!(
        "relative mass drift {rel:.2e} over {} steps",
        res.steps
    ))
}
