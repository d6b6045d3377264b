//! The named experiments: each binds a domain motion, problem data, and the
//! manufactured solution of one convergence table. Forcing terms are written
//! out by hand, so every run starts by checking them against a
//! finite-difference residual of the strong form
//! rho_t - mu lap(rho) + div(b rho) = f.

use anyhow::{bail, Result};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use vem::ale::forms::ProblemData;
use vem::ale::{maps, Motion};
use vem::Pt;

pub struct CdPreset {
    pub name: &'static str,
    pub mu: f64,
    pub b: fn(Pt, f64) -> Pt,
    pub f: fn(Pt, f64) -> f64,
    pub exact: fn(Pt, f64) -> f64,
    /// Builds the motion; receives the configured final time (only the
    /// time-linear map depends on it).
    pub motion: fn(f64) -> Motion,
    pub base_cells: usize,
    pub default_levels: usize,
    pub default_dt0: f64,
}

pub struct PmePreset {
    pub name: &'static str,
    pub strong_bc: bool,
    pub r0: f64,
    pub base_cells: usize,
    pub default_levels: usize,
    pub default_dt0: f64,
}

pub enum Preset {
    Cd(CdPreset),
    Pme(PmePreset),
}

impl CdPreset {
    pub fn problem_data(&self) -> ProblemData {
        let (b, f) = (self.b, self.f);
        ProblemData {
            mu: self.mu,
            b: Box::new(move |p, t| b(p, t)),
            f: Box::new(move |p, t| f(p, t)),
        }
    }
}

// rho = exp(-pi^2 t) sin(pi x) sin(pi y) with b = (x, y), mu = 1
fn sine_exact(p: Pt, t: f64) -> f64 {
    (-PI * PI * t).exp() * (PI * p.x).sin() * (PI * p.y).sin()
}

fn position_field(p: Pt, _t: f64) -> Pt {
    p
}

fn sine_forcing(p: Pt, t: f64) -> f64 {
    let e = (-PI * PI * t).exp();
    let rho = e * (PI * p.x).sin() * (PI * p.y).sin();
    let rho_x = PI * e * (PI * p.x).cos() * (PI * p.y).sin();
    let rho_y = PI * e * (PI * p.x).sin() * (PI * p.y).cos();
    (PI * PI + 2.0) * rho + p.x * rho_x + p.y * rho_y
}

// heat problem: b = 0, f = 0, rho = exp(-2 pi^2 t) sin(pi x) sin(pi y)
fn heat_exact(p: Pt, t: f64) -> f64 {
    (-2.0 * PI * PI * t).exp() * (PI * p.x).sin() * (PI * p.y).sin()
}

fn zero_field(_p: Pt, _t: f64) -> Pt {
    Pt::ZERO
}

fn zero_scalar(_p: Pt, _t: f64) -> f64 {
    0.0
}

// travelling feature on the oscillating channel: b = (x, y), mu = 1,
// rho = exp(-pi^2 t) sin(pi (y - A sin(pi uy t))) sin(pi (x - ux t))
const OSC_A: f64 = 0.1;
const OSC_UX: f64 = 20.0;
const OSC_UY: f64 = 20.0;

fn osc_exact(p: Pt, t: f64) -> f64 {
    let s = OSC_A * (PI * OSC_UY * t).sin();
    (-PI * PI * t).exp() * (PI * (p.y - s)).sin() * (PI * (p.x - OSC_UX * t)).sin()
}

fn osc_forcing(p: Pt, t: f64) -> f64 {
    let e = (-PI * PI * t).exp();
    let s = OSC_A * (PI * OSC_UY * t).sin();
    let s_dot = OSC_A * OSC_UY * PI * (PI * OSC_UY * t).cos();
    let (sy, cy) = (PI * (p.y - s)).sin_cos();
    let (sx, cx) = (PI * (p.x - OSC_UX * t)).sin_cos();
    let rho = e * sy * sx;
    let rho_x = PI * e * sy * cx;
    let rho_y = PI * e * cy * sx;
    let rho_t = -PI * PI * rho - PI * s_dot * e * cy * sx - PI * OSC_UX * e * sy * cx;
    rho_t + 2.0 * PI * PI * rho + 2.0 * rho + p.x * rho_x + p.y * rho_y
}

pub fn lookup(name: &str) -> Option<Preset> {
    let cd = |name, b, f, exact, motion| {
        Preset::Cd(CdPreset {
            name,
            mu: 1.0,
            b,
            f,
            exact,
            motion,
            base_cells: 100,
            default_levels: 4,
            default_dt0: 1e-3,
        })
    };
    let pme = |name, strong_bc| {
        Preset::Pme(PmePreset {
            name,
            strong_bc,
            r0: 0.5,
            base_cells: 48,
            default_levels: 3,
            default_dt0: 1e-4,
        })
    };
    Some(match name {
        "ce_static" => cd("ce_static", position_field, sine_forcing, sine_exact, |_| {
            maps::curved_elements()
        }),
        "warped_square" => cd(
            "warped_square",
            position_field,
            sine_forcing,
            sine_exact,
            |_| maps::warped_square(),
        ),
        "ce_linear" => cd(
            "ce_linear",
            zero_field,
            zero_scalar,
            heat_exact,
            maps::linear_curved,
        ),
        "vorticial" => cd("vorticial", zero_field, zero_scalar, heat_exact, |_| {
            maps::vortex()
        }),
        "oscillating" => cd("oscillating", position_field, osc_forcing, osc_exact, |_| {
            maps::oscillating(OSC_A, OSC_UY)
        }),
        "custom" => cd("custom", zero_field, zero_scalar, heat_exact, |_| {
            maps::identity()
        }),
        "pme" => pme("pme", true),
        "pme_weak" => pme("pme_weak", false),
        _ => return None,
    })
}

/// Checks the hand-written forcing against a finite-difference residual of
/// the strong form at random space-time points. The closed forms are entire,
/// so the probes need not stay inside the physical domain.
pub fn validate_forcing(p: &CdPreset, t_final: f64) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x464f5243);
    let hs = 3e-4;
    let ht = 1e-6;
    for _ in 0..20 {
        let x = rng.random_range(0.1..1.9);
        let y = rng.random_range(0.1..0.9);
        let t = rng.random_range(0.0..t_final);
        let pt = Pt::new(x, y);
        let rho = |q: Pt, tt: f64| (p.exact)(q, tt);
        let flux = |q: Pt, tt: f64| {
            let b = (p.b)(q, tt);
            (b.x * rho(q, tt), b.y * rho(q, tt))
        };
        let d_dt = (rho(pt, t + ht) - rho(pt, t - ht)) / (2.0 * ht);
        let lap = (rho(Pt::new(x + hs, y), t)
            + rho(Pt::new(x - hs, y), t)
            + rho(Pt::new(x, y + hs), t)
            + rho(Pt::new(x, y - hs), t)
            - 4.0 * rho(pt, t))
            / (hs * hs);
        let div = (flux(Pt::new(x + hs, y), t).0 - flux(Pt::new(x - hs, y), t).0
            + flux(Pt::new(x, y + hs), t).1
            - flux(Pt::new(x, y - hs), t).1)
            / (2.0 * hs);
        let fd = d_dt - p.mu * lap + div;
        let f = (p.f)(pt, t);
        let tol = 1e-4 * f.abs().max(1.0);
        if (fd - f).abs() > tol {
            bail!(
                "preset {}: forcing residual {:.3e} at ({x:.3}, {y:.3}, t={t:.4}) exceeds {tol:.1e}",
                p.name,
                (fd - f).abs()
            );
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_cd_preset_forcing_passes_the_fd_oracle() {
        for name in ["ce_static", "warped_square", "ce_linear", "vorticial", "oscillating", "custom"] {
            match lookup(name).unwrap() {
                Preset::Cd(p) => validate_forcing(&p, 0.01).unwrap(),
                Preset::Pme(_) => unreachable!(),
            }
        }
    }

    #[test]
    fn a_wrong_forcing_is_caught() {
        let mut p = match lookup("ce_static").unwrap() {
            Preset::Cd(p) => p,
            _ => unreachable!(),
        };
        p.f = heat_exact; // wrong on purpose
        assert!(validate_forcing(&p, 0.01).is_err());
    }

    #[test]
    fn oscillating_solution_follows_the_moving_channel() {
        // the solution vanishes on the oscillating horizontal boundaries
        let t = 0.0063;
        let s = OSC_A * (PI * OSC_UY * t).sin();
        for x in [0.2, 1.1, 1.9] {
            assert!(osc_exact(Pt::new(x, s), t).abs() < 1e-14);
            assert!(osc_exact(Pt::new(x, 1.0 + s), t).abs() < 1e-14);
        }
    }
}
