//! Density-dependent posterior quantities evaluated by nested quadrature.
//!
//! With `u = v t` and `v = r / √(1+t²)` the posterior loss of index `m`
//! becomes
//! `P(h) = ∫_{-∞}^{y} (1+t²)^{-(m+1)/2} ∫_0^∞ ρ(r (t+h)/√(1+t²)) r^m f(r²) dr dt`
//! and its derivative in `h` is the `B_m` integral
//! `∫_{-∞}^{y} (1+t²)^{-(m+2)/2} ∫_0^∞ ρ'(r (t+h)/√(1+t²)) r^{m+1} f(r²) dr dt`.
//! The outer variable is `d = t + h`, so the loss kink sits at `d = 0`.

use crate::error::{Error, Result};
use crate::estimators::free::pieces_around_zero;
use crate::loss::Loss;
use crate::model::ProblemSetup;
use crate::numerics::quadrature::{integrate_nested, integrate_split, Integral, QuadratureSpec};
use crate::numerics::roots::{find_root_with, Expand, RootOptions};

/// Tolerances for the nested passes used in root solves and polishing.
pub(crate) const TIGHT: QuadratureSpec = QuadratureSpec {
    rel_tol: 1e-10,
    abs_tol: 1e-300,
    max_subdivisions: 2000,
};

/// Tolerances for the coarse scan that only selects a bracket.
pub(crate) const COARSE: QuadratureSpec = QuadratureSpec {
    rel_tol: 1e-6,
    abs_tol: 1e-300,
    max_subdivisions: 2000,
};

/// Mode of `r^k f(r²)`: the root of `k + 2 t f'(t)/f(t)` in `t = r²`.
pub(crate) fn radial_scale(setup: &ProblemSetup, k: f64) -> f64 {
    let b = setup.bound();
    let g = |lt: f64| -> Result<f64> {
        let t = lt.exp();
        Ok(k + 2.0 * t * b.dlog(t))
    };
    let opts = RootOptions {
        tol: 1e-6,
        max_iter: 200,
        expand: Expand::Both,
        max_doublings: 12,
    };
    match find_root_with(g, -1.0, 2.0, opts) {
        Ok(lt) => (0.5 * lt).exp(),
        Err(_) => setup.radial_mode(),
    }
}

pub(crate) struct PosteriorKernel<'a> {
    setup: &'a ProblemSetup,
    loss: &'a Loss,
    m: f64,
    breaks: [f64; 3],
    q: f64,
}

impl<'a> PosteriorKernel<'a> {
    pub fn new(setup: &'a ProblemSetup, loss: &'a Loss, m: f64) -> Result<Self> {
        if !(m >= 1.0) {
            return Err(Error::invalid(format!("posterior index must be at least 1, got {m}")));
        }
        let s = radial_scale(setup, m + 1.0);
        // ρ' of a concave power is singular at 0 with order p - 1
        let q = loss.exponent().filter(|p| *p < 1.0).unwrap_or(1.0);
        Ok(Self {
            setup,
            loss,
            m,
            breaks: [0.25 * s, s, 4.0 * s],
            q,
        })
    }

    /// `∫_0^∞ φ(r a) r^k f(r²) dr`.
    fn inner<F>(&self, phi: F, a: f64, k: f64, spec: &QuadratureSpec) -> Result<Integral>
    where
        F: Fn(f64) -> f64,
    {
        if a == 0.0 {
            return Ok(Integral::ZERO);
        }
        let b = self.setup.bound();
        integrate_split(
            |r| {
                if r <= 0.0 {
                    return 0.0;
                }
                let w = (k * r.ln() + b.ln_f(r * r)).exp();
                if w == 0.0 {
                    0.0
                } else {
                    phi(r * a) * w
                }
            },
            0.0,
            f64::INFINITY,
            &self.breaks,
            spec,
        )
    }

    /// Sum of the nested integral over `d < 0` and `d > 0`, each one-signed.
    fn outer<F>(&self, h: f64, y: f64, deriv: bool, spec: &QuadratureSpec, phi: F) -> Result<Integral>
    where
        F: Fn(f64) -> f64 + Copy,
    {
        let (wexp, k, q) = if deriv {
            (0.5 * (self.m + 2.0), self.m + 1.0, self.q)
        } else {
            (0.5 * (self.m + 1.0), self.m, 1.0)
        };
        let inner_spec = spec.inner();
        let slice = |d: f64| -> Result<Integral> {
            let t = d - h;
            let s = (t * t).ln_1p();
            let w = (-wexp * s).exp();
            let a = d * (-0.5 * s).exp();
            let mut i = self.inner(phi, a, k, &inner_spec)?;
            i.value *= w;
            i.error *= w;
            Ok(i)
        };
        let top = y + h;
        let br = [h - 1.0, h, h + 1.0];
        let neg = integrate_nested(slice, &pieces_around_zero(f64::NEG_INFINITY, top.min(0.0), &br, q), spec)?;
        let pos = if top > 0.0 {
            integrate_nested(slice, &pieces_around_zero(0.0, top, &br, q), spec)?
        } else {
            Integral::ZERO
        };
        Ok(Integral {
            value: neg.value + pos.value,
            error: neg.error + pos.error,
            abs_value: neg.abs_value + pos.abs_value,
            evaluations: neg.evaluations + pos.evaluations,
        })
    }

    /// Posterior loss `P(h)` (unnormalized).
    pub fn loss_integral(&self, h: f64, y: f64, spec: &QuadratureSpec) -> Result<Integral> {
        let loss = self.loss;
        self.outer(h, y, false, spec, move |t| loss.rho(t))
    }

    /// `dP/dh`, the `B_m` integral at `w = y`, `c0 + z = h`.
    pub fn deriv_integral(&self, h: f64, y: f64, spec: &QuadratureSpec) -> Result<Integral> {
        let loss = self.loss;
        self.outer(h, y, true, spec, move |t| loss.drho(t))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::free::FreeObjective;
    use crate::model::ModelDensity;

    #[test]
    fn factorizes_for_power_losses() {
        // for homogeneous ρ the nested integral is the density-free one
        // times ∫ r^{m+p} f(r²) dr
        let setup = ProblemSetup::new(ModelDensity::student(3.0).unwrap(), 2).unwrap();
        let loss = Loss::asym_power(2.0, 1.0, 2.0).unwrap();
        let m = 2.0;
        let k = PosteriorKernel::new(&setup, &loss, m).unwrap();
        let radial = setup.radial_integral(m + 2.0).unwrap();
        let j = FreeObjective::new(&loss, m).unwrap();
        for (h, y) in [(0.3, 0.0), (1.0, -1.5), (-0.2, 2.0)] {
            let b = k.deriv_integral(h, y, &TIGHT).unwrap().value;
            let expect = j.deriv(h, y).unwrap() * radial;
            assert!((b - expect).abs() < 1e-8 * expect.abs().max(radial), "{b} vs {expect}");
        }
    }

    #[test]
    fn normal_scale_is_root_of_mode_equation() {
        let setup = ProblemSetup::new(ModelDensity::Normal, 3).unwrap();
        // r^k e^{-r²/2} peaks at √k
        assert!((radial_scale(&setup, 4.0) - 2.0).abs() < 1e-5);
    }
}
