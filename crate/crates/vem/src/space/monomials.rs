//! Scaled monomial bases m_alpha(p) = ((p - c)/h)^alpha on one element.

use crate::geometry::Pt;

pub fn n_monomials(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

/// Exponent pairs ordered by total degree, x-power descending within each
/// block: 1, x, y, x^2, xy, y^2, ...
pub fn exponents(k: usize) -> Vec<(u32, u32)> {
    let mut v = Vec::with_capacity(n_monomials(k));
    for deg in 0..=k as u32 {
        for b in 0..=deg {
            v.push((deg - b, b));
        }
    }
    v
}

/// Position of exponent (a, b) in the `exponents` ordering.
pub fn index_of(a: u32, b: u32) -> usize {
    let l = (a + b) as usize;
    l * (l + 1) / 2 + b as usize
}

#[derive(Debug, Clone)]
pub struct MonomialBasis {
    pub k: usize,
    pub center: Pt,
    pub h: f64,
    pub exps: Vec<(u32, u32)>,
}

impl MonomialBasis {
    pub fn new(k: usize, center: Pt, h: f64) -> MonomialBasis {
        MonomialBasis {
            k,
            center,
            h,
            exps: exponents(k),
        }
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    fn scaled(&self, p: Pt) -> (f64, f64) {
        ((p.x - self.center.x) / self.h, (p.y - self.center.y) / self.h)
    }

    pub fn eval(&self, i: usize, p: Pt) -> f64 {
        let (xi, eta) = self.scaled(p);
        let (a, b) = self.exps[i];
        xi.powi(a as i32) * eta.powi(b as i32)
    }

    /// Evaluates all monomials at once; `out.len()` must equal `len()`.
    pub fn eval_all(&self, p: Pt, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.exps.len());
        let (xi, eta) = self.scaled(p);
        let mut px = [1.0; 4];
        let mut py = [1.0; 4];
        for d in 1..=self.k {
            px[d] = px[d - 1] * xi;
            py[d] = py[d - 1] * eta;
        }
        for (i, &(a, b)) in self.exps.iter().enumerate() {
            out[i] = px[a as usize] * py[b as usize];
        }
    }

    pub fn grad(&self, i: usize, p: Pt) -> Pt {
        let (xi, eta) = self.scaled(p);
        let (a, b) = self.exps[i];
        let gx = if a == 0 {
            0.0
        } else {
            a as f64 / self.h * xi.powi(a as i32 - 1) * eta.powi(b as i32)
        };
        let gy = if b == 0 {
            0.0
        } else {
            b as f64 / self.h * xi.powi(a as i32) * eta.powi(b as i32 - 1)
        };
        Pt::new(gx, gy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_and_index_agree() {
        let exps = exponents(3);
        assert_eq!(exps.len(), 10);
        assert_eq!(exps[0], (0, 0));
        assert_eq!(exps[1], (1, 0));
        assert_eq!(exps[2], (0, 1));
        assert_eq!(exps[5], (0, 2));
        for (i, &(a, b)) in exps.iter().enumerate() {
            assert_eq!(index_of(a, b), i);
        }
    }

    #[test]
    fn eval_and_grad_consistent() {
        let basis = MonomialBasis::new(3, Pt::new(0.3, -0.2), 0.7);
        let p = Pt::new(0.55, 0.11);
        let mut vals = vec![0.0; basis.len()];
        basis.eval_all(p, &mut vals);
        let eps = 1e-6;
        for i in 0..basis.len() {
            assert!((vals[i] - basis.eval(i, p)).abs() < 1e-14);
            let g = basis.grad(i, p);
            let fx = (basis.eval(i, Pt::new(p.x + eps, p.y))
                - basis.eval(i, Pt::new(p.x - eps, p.y)))
                / (2.0 * eps);
            let fy = (basis.eval(i, Pt::new(p.x, p.y + eps))
                - basis.eval(i, Pt::new(p.x, p.y - eps)))
                / (2.0 * eps);
            assert!((g.x - fx).abs() < 1e-8, "monomial {i}");
            assert!((g.y - fy).abs() < 1e-8, "monomial {i}");
        }
    }
}
