//! Convergence smoke tests through the public API only: a curved-map heat
//! problem must refine at the expected orders, and the weak porous-medium
//! update must track the analytic front. The full tables live in the CLI
//! crate; these runs are kept small.

use vem::ale::forms::ProblemData;
use vem::ale::Motion;
use vem::analysis::{boundary_radius_error, l2_h1_errors, mesh_size};
use vem::mesh::voronoi;
use vem::pme::{self, PmeOptions, Similarity};
use vem::space::VemSpace;
use vem::time::{run_convection_diffusion, TimeGrid};
use vem::Pt;

const PI: f64 = std::f64::consts::PI;

fn heat_exact(p: Pt, t: f64) -> f64 {
    (-2.0 * PI * PI * t).exp() * (PI * p.x).sin() * (PI * p.y).sin()
}

/// Interior-curving map that fixes the unit-square boundary pointwise, so
/// the heat solution keeps its homogeneous Dirichlet data.
fn bump_map(p: Pt) -> Pt {
    let s = 0.08 * (PI * p.x).sin() * (PI * p.y).sin();
    Pt::new(p.x + s, p.y - s)
}

#[test]
fn heat_on_a_curved_map_converges_at_order_k_plus_one() {
    let k = 2;
    let t_final = 0.01;
    let mut errs = Vec::new();
    let mut hs: Vec<f64> = Vec::new();
    for (level, cells) in [100usize, 400].into_iter().enumerate() {
        let mesh = voronoi::generate_cvt(cells, 60, 17 + level as u64).unwrap();
        let space = VemSpace::new(mesh, k).unwrap();
        let h = mesh_size(&space);
        let dt = if hs.is_empty() {
            1e-3
        } else {
            1e-3 * (h / hs[0]).powf((k as f64 + 1.0) / 2.0)
        };
        let grid = TimeGrid {
            theta: 0.5,
            t0: 0.0,
            t_final,
            dt,
        };
        let motion = Motion::Static(Box::new(bump_map));
        let data = ProblemData::diffusion_only(1.0);
        let res = run_convection_diffusion(
            &space,
            &motion,
            &data,
            &heat_exact,
            &|p| heat_exact(p, 0.0),
            &grid,
        )
        .unwrap();
        let exact = vem::ale::interpolate_composed(&space, &res.map, |x| heat_exact(x, res.t));
        let norms = l2_h1_errors(&space, &res.map, &res.rho, &exact).unwrap();
        hs.push(h);
        errs.push(norms);
    }
    let rate_l2 = (errs[0].l2 / errs[1].l2).ln() / (hs[0] / hs[1]).ln();
    let rate_h1 = (errs[0].h1 / errs[1].h1).ln() / (hs[0] / hs[1]).ln();
    assert!(rate_l2 > 2.5, "L2 rate {rate_l2:.2}, errors {errs:?}");
    assert!(rate_h1 > 1.5, "H1 rate {rate_h1:.2}");
}

#[test]
fn weak_porous_medium_run_tracks_the_analytic_front() {
    let mesh = voronoi::generate_cvt_disk(48, 60, 5, 0.5).unwrap();
    let space = VemSpace::new(mesh, 2).unwrap();
    let sim = Similarity::new(0.5);
    let opts = PmeOptions {
        strong_bc: false,
        t0: sim.t0,
        t_final: sim.t0 + 2e-3,
        dt: 1e-4,
        rho_floor: 1e-12,
    };
    let map0 = pme::initial_map(&space, false, 0.5).unwrap();
    let rho0 = vem::ale::interpolate_composed(&space, &map0, |x| sim.eval(x, sim.t0));
    let res = pme::run_pme(&space, map0, rho0, &opts).unwrap();
    let front_err = boundary_radius_error(&space, &res.map, sim.front_radius(res.t));
    assert!(
        front_err < 5e-3,
        "front radius error {front_err:.2e} after {} steps",
        res.steps
    );
    let drift = res.max_mass_drift / res.mass_initial;
    assert!(drift.abs() < 1e-12, "mass drift {drift:.2e}");
}
