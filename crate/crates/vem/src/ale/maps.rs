//! The prescribed domain motions used by the convergence experiments.

use super::Motion;
use crate::geometry::Pt;
use std::f64::consts::PI;

/// Identity map of the reference domain.
pub fn identity() -> Motion {
    Motion::Static(Box::new(|p| p))
}

/// Static map bending interior edges of the unit square into curves.
pub fn curved_elements() -> Motion {
    Motion::Static(Box::new(|p: Pt| {
        Pt::new(
            p.x + 0.5 * p.x * p.y * (1.0 - p.x),
            p.y + 0.5 * p.x * p.y * (1.0 - p.y),
        )
    }))
}

/// Static warp of the unit square with non-polynomial Jacobian; the image
/// has area (sqrt(3)/2)(e - 1).
pub fn warped_square() -> Motion {
    Motion::Static(Box::new(|p: Pt| Pt::new((p.x * PI / 3.0).sin(), p.y.exp())))
}

/// Exact image area of the `warped_square` map.
pub fn warped_square_area() -> f64 {
    3f64.sqrt() / 2.0 * (std::f64::consts::E - 1.0)
}

/// Time-linear version of the curved-elements map, reaching half the static
/// distortion at `t_final`.
pub fn linear_curved(t_final: f64) -> Motion {
    Motion::Analytic {
        map: Box::new(move |p: Pt, t: f64| {
            let s = t / (2.0 * t_final);
            Pt::new(
                p.x + s * p.x * p.y * (1.0 - p.x),
                p.y + s * p.x * p.y * (1.0 - p.y),
            )
        }),
        velocity: Box::new(move |p: Pt, _t: f64| {
            let s = 1.0 / (2.0 * t_final);
            Pt::new(s * p.x * p.y * (1.0 - p.x), s * p.x * p.y * (1.0 - p.y))
        }),
    }
}

/// Divergence-free vortex velocity field; the domain is stirred by solving
/// the trajectory ODE with Heun's method.
pub fn vortex() -> Motion {
    Motion::SpatialVelocity(Box::new(|p: Pt, _t: f64| vortex_velocity(p)))
}

pub fn vortex_velocity(p: Pt) -> Pt {
    Pt::new(
        2.0 * (PI * p.x).sin() * (PI * p.y).cos(),
        -2.0 * (PI * p.x).cos() * (PI * p.y).sin(),
    )
}

/// Affine motion stretching the unit square to [0,2]x[0,1] and oscillating
/// it vertically with amplitude `a` and frequency `uy`.
pub fn oscillating(a: f64, uy: f64) -> Motion {
    Motion::Analytic {
        map: Box::new(move |p: Pt, t: f64| {
            Pt::new(2.0 * p.x, p.y + a * (PI * uy * t).sin())
        }),
        velocity: Box::new(move |_p: Pt, t: f64| {
            Pt::new(0.0, a * uy * PI * (PI * uy * t).cos())
        }),
    }
}
