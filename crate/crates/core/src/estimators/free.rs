//! The density-free posterior objective for power-type losses,
//! `J(h) = ∫_{-∞}^{y} ρ(t + h) (1 + t²)^{-(M+p+1)/2} dt`, and its derivative.

use crate::error::{Error, Result};
use crate::loss::Loss;
use crate::numerics::quadrature::{integrate_pieces, split_pieces, Piece, QuadratureSpec};

pub(crate) const FREE_SPEC: QuadratureSpec = QuadratureSpec {
    rel_tol: 1e-12,
    abs_tol: 1e-300,
    max_subdivisions: 4000,
};

#[derive(Debug, Clone, Copy)]
pub(crate) struct FreeObjective {
    spec: QuadratureSpec,
    p: f64,
    c1: f64,
    c2: f64,
    expo: f64,
}

/// Breakpoints closer than this to a singular origin are dropped.
const NEAR_ZERO: f64 = 1e-3;

/// Pieces of `[lo, hi]` split at `breaks`, singular at `0` when it is an endpoint.
pub(crate) fn pieces_around_zero(lo: f64, hi: f64, breaks: &[f64], q: f64) -> Vec<Piece> {
    let mut kept: Vec<f64> = if q < 2.0 && q != 1.0 && (lo == 0.0 || hi == 0.0) {
        breaks.iter().copied().filter(|b| b.abs() > NEAR_ZERO).collect()
    } else {
        breaks.to_vec()
    };
    // keep the singular piece finite
    kept.extend([-1.0, 1.0]);
    let mut ps = split_pieces(lo, hi, &kept);
    if hi == 0.0 {
        if let Some(last) = ps.last_mut() {
            *last = last.singular_upper(q);
        }
    }
    if lo == 0.0 {
        if let Some(first) = ps.first_mut() {
            *first = first.singular_lower(q);
        }
    }
    ps
}

impl FreeObjective {
    /// Objective of index `M` (the weight exponent is `-(M+p+1)/2`).
    pub fn new(loss: &Loss, index: f64) -> Result<Self> {
        let (p, c1, c2) = loss
            .asym()
            .ok_or_else(|| Error::invalid("density-free objective needs a power-type loss"))?;
        if !(index > 0.0) {
            return Err(Error::Existence(format!("density-free objective needs index > 0, got {index}")));
        }
        Ok(Self {
            spec: FREE_SPEC,
            p,
            c1,
            c2,
            expo: 0.5 * (index + p + 1.0),
        })
    }

    /// Copy with a looser tolerance, for scanning before a derivative polish.
    pub fn coarse(mut self) -> Self {
        self.spec = self.spec.with_rel_tol(1e-6);
        self
    }

    #[inline]
    fn weight(&self, t: f64) -> f64 {
        (-self.expo * (t * t).ln_1p()).exp()
    }

    fn breaks(h: f64) -> [f64; 3] {
        [h - 1.0, h, h + 1.0]
    }

    /// Integrates `c1 φ(-d)` over `d < 0` and `c2 φ(d)` over `d > 0`, both
    /// weighted by `w(d - h)` and cut at `d = y + h`; `q` marks the order of
    /// the singularity of `φ` at the origin.
    fn split_integral<F>(&self, h: f64, y: f64, q: f64, phi: F) -> Result<(f64, f64)>
    where
        F: Fn(f64) -> f64,
    {
        let top = y + h;
        let br = Self::breaks(h);
        let neg_part = |lo: f64| -> Result<f64> {
            Ok(integrate_pieces(|d| phi(-d) * self.weight(d - h), &pieces_around_zero(lo, 0.0, &br, q), &self.spec)?
                .value)
        };
        // a cut just below the singular origin is taken as a difference of
        // two integrals that both end at the origin
        let neg = if top >= 0.0 {
            neg_part(f64::NEG_INFINITY)?
        } else if top > -NEAR_ZERO && q < 1.0 {
            neg_part(f64::NEG_INFINITY)? - neg_part(top)?
        } else {
            integrate_pieces(|d| phi(-d) * self.weight(d - h), &split_pieces(f64::NEG_INFINITY, top, &br), &self.spec)?
                .value
        };
        let pos = if top > 0.0 {
            integrate_pieces(|d| phi(d) * self.weight(d - h), &pieces_around_zero(0.0, top, &br, q), &self.spec)?
                .value
        } else {
            0.0
        };
        Ok((self.c1 * neg, self.c2 * pos))
    }

    /// `J(h)` with upper limit `y` (may be `+∞`).
    pub fn value(&self, h: f64, y: f64) -> Result<f64> {
        let p = self.p;
        let (a, b) = self.split_integral(h, y, p + 1.0, |d| d.powf(p))?;
        Ok(a + b)
    }

    /// `J'(h)`.
    pub fn deriv(&self, h: f64, y: f64) -> Result<f64> {
        let p = self.p;
        let (a, b) = self.split_integral(h, y, p, |d| p * d.powf(p - 1.0))?;
        Ok(b - a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::student_like::StudentLike;

    #[test]
    fn squared_loss_derivative_is_truncated_mean_condition() {
        // J'(h) = 2 ∫_{-∞}^y (t+h) w dt vanishes at h = -E[T|T≤y], index M+1
        let loss = Loss::power(2.0).unwrap();
        let j = FreeObjective::new(&loss, 1.0).unwrap();
        let h = -StudentLike::new(2.0).unwrap().trunc_mean(0.5).unwrap();
        assert!(j.deriv(h, 0.5).unwrap().abs() < 1e-12);
        assert!(j.deriv(h + 0.1, 0.5).unwrap() > 0.0);
    }

    #[test]
    fn linear_loss_derivative_is_cdf_difference() {
        let loss = Loss::asym_power(1.0, 1.0, 3.0).unwrap();
        let j = FreeObjective::new(&loss, 2.0).unwrap();
        let f = StudentLike::new(2.0).unwrap();
        let z = (-f.ln_norm()).exp();
        let (h, y) = (0.3, 1.2);
        let expect = (-f.cdf(-h) + 3.0 * (f.cdf(y) - f.cdf(-h))) / z;
        assert!((j.deriv(h, y).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn derivative_matches_difference_quotient_for_concave_power() {
        let loss = Loss::power(0.5).unwrap();
        let j = FreeObjective::new(&loss, 3.0).unwrap();
        let (h, y, e) = (0.4, 0.7, 1e-5);
        let fd = (j.value(h + e, y).unwrap() - j.value(h - e, y).unwrap()) / (2.0 * e);
        assert!((fd - j.deriv(h, y).unwrap()).abs() < 1e-7);
    }
}
