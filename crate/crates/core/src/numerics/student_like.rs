//! The Student-like family with density proportional to `(1+t²)^(-(m+2)/2)`.
//!
//! It is a Student-t law with `m + 1` degrees of freedom rescaled by
//! `1/√(m+1)`, so the cdf reduces to a regularized incomplete beta function.

use statrs::function::beta::{beta_reg, ln_beta};

use crate::error::{Error, Result};
use crate::numerics::roots::{find_root_with, Expand, RootOptions};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudentLike {
    m: f64,
}

impl StudentLike {
    /// Any index `m > -1` gives a proper density.
    pub fn new(m: f64) -> Result<Self> {
        if !(m > -1.0) || !m.is_finite() {
            return Err(Error::invalid(format!("Student-like index must exceed -1, got {m}")));
        }
        Ok(Self { m })
    }

    pub fn index(&self) -> f64 {
        self.m
    }

    /// `ln ∫ (1+t²)^(-(m+2)/2) dt`.
    pub fn ln_norm(&self) -> f64 {
        ln_beta(0.5, 0.5 * (self.m + 1.0))
    }

    pub fn pdf(&self, t: f64) -> f64 {
        (-(0.5 * (self.m + 2.0)) * (t * t).ln_1p() - self.ln_norm()).exp()
    }

    /// `P(T ≤ -|t|)`, accurate deep in the tail.
    fn lower_tail(&self, t: f64) -> f64 {
        let x = 1.0 / (1.0 + t * t);
        if x == 0.0 {
            return 0.0;
        }
        0.5 * beta_reg(0.5 * (self.m + 1.0), 0.5, x)
    }

    pub fn cdf(&self, t: f64) -> f64 {
        if t.is_nan() {
            return f64::NAN;
        }
        if t == f64::NEG_INFINITY {
            return 0.0;
        }
        if t == f64::INFINITY {
            return 1.0;
        }
        let tail = self.lower_tail(t);
        if t <= 0.0 {
            tail
        } else {
            1.0 - tail
        }
    }

    pub fn quantile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::invalid(format!("quantile level must lie in (0,1), got {q}")));
        }
        if q == 0.5 {
            return Ok(0.0);
        }
        if q > 0.5 {
            return self.lower_quantile(1.0 - q).map(|t| -t);
        }
        self.lower_quantile(q)
    }

    /// Solves `P(T ≤ t) = q` for `q < 1/2` in log scale for tail accuracy.
    fn lower_quantile(&self, q: f64) -> Result<f64> {
        // tail asymptote P(T ≤ t) ≈ |t|^{-(m+1)} / ((m+1) Z_m) gives the start
        let k = self.m + 1.0;
        let guess = ((-(q.ln()) - self.ln_norm() - k.ln()) / k).exp().max(1e-3);
        let lq = q.ln();
        let g = |s: f64| -> Result<f64> {
            let t = -s;
            Ok(self.lower_tail(t).ln() - lq)
        };
        // g is increasing in t = -s, hence decreasing in s.
        let s = find_root_with(
            g,
            0.0,
            2.0 * guess + 1.0,
            RootOptions {
                tol: 1e-15 * (1.0 + guess),
                max_iter: 300,
                expand: Expand::Upper,
                max_doublings: 200,
            },
        )?;
        Ok(-s)
    }

    /// `E[T | T ≤ y]`; finite for `m > 0`.
    pub fn trunc_mean(&self, y: f64) -> Result<f64> {
        let m = self.m;
        if !(m > 0.0) {
            return Err(Error::Divergent(format!(
                "truncated mean of the Student-like law needs index > 0, got {m}"
            )));
        }
        if y == f64::INFINITY {
            return Ok(0.0);
        }
        if y < -1e7 {
            // tail: E[T|T≤y] → y (m+1)/m
            return Ok(y * (m + 1.0) / m);
        }
        let num = -(-(0.5 * m) * (y * y).ln_1p()).exp() / m;
        let mass = self.cdf(y) * self.ln_norm().exp();
        Ok(num / mass)
    }
}

pub fn student_like_cdf(m: f64, t: f64) -> Result<f64> {
    Ok(StudentLike::new(m)?.cdf(t))
}

pub fn student_like_quantile(m: f64, q: f64) -> Result<f64> {
    StudentLike::new(m)?.quantile(q)
}

pub fn trunc_mean(m: f64, y: f64) -> Result<f64> {
    StudentLike::new(m)?.trunc_mean(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::quadrature::{integrate_1d, QuadratureSpec};

    #[test]
    fn symmetric_at_zero() {
        for m in [0.5, 1.0, 2.0, 7.3] {
            assert!((student_like_cdf(m, 0.0).unwrap() - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn index_one_closed_form() {
        for t in [-3.0, -0.4, 0.0, 1.0, 2.5] {
            let exact = 0.5 * (1.0 + t / (1.0f64 + t * t).sqrt());
            assert!((student_like_cdf(1.0, t).unwrap() - exact).abs() < 1e-14);
        }
        assert!((student_like_cdf(1.0, 1.0).unwrap() - 0.853_553_390_593_273_7).abs() < 1e-12);
        let q = student_like_quantile(1.0, 0.25).unwrap();
        assert!((q + 1.0 / 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn round_trip() {
        for m in [1.0, 2.0, 3.0, 6.0] {
            for i in 1..=99 {
                let q = i as f64 / 100.0;
                let t = student_like_quantile(m, q).unwrap();
                assert!((student_like_cdf(m, t).unwrap() - q).abs() < 1e-10, "m={m} q={q}");
            }
        }
        let t = student_like_quantile(2.0, 1e-200).unwrap();
        let back = student_like_cdf(2.0, t).unwrap();
        assert!(((back - 1e-200) / 1e-200).abs() < 1e-9);
    }

    #[test]
    fn density_matches_cdf() {
        let d = StudentLike::new(2.5).unwrap();
        let spec = QuadratureSpec::one_dim();
        let mass = integrate_1d(|t| d.pdf(t), f64::NEG_INFINITY, 0.7, &spec).unwrap().value;
        assert!((mass - d.cdf(0.7)).abs() < 1e-12);
    }

    #[test]
    fn truncated_means() {
        assert!((trunc_mean(2.0, 0.0).unwrap() + 2.0 / std::f64::consts::PI).abs() < 1e-13);
        let exact = -0.25 / (0.25 + 3.0 * std::f64::consts::PI / 8.0);
        assert!((trunc_mean(2.0, 1.0).unwrap() - exact).abs() < 1e-13);
        assert!(trunc_mean(3.0, 1e6).unwrap().abs() < 1e-12);
        assert!(trunc_mean(1.0, 0.0).is_ok());
        assert!(matches!(trunc_mean(0.0, 0.0), Err(Error::Divergent(_))));
    }

    #[test]
    fn truncated_mean_matches_quadrature() {
        let spec = QuadratureSpec::one_dim().with_rel_tol(1e-13);
        for (m, y) in [(1.5, -2.0), (3.0, 0.4), (4.0, -30.0)] {
            let d = StudentLike::new(m).unwrap();
            let num = integrate_1d(|t| t * d.pdf(t), f64::NEG_INFINITY, y, &spec).unwrap().value;
            let den = integrate_1d(|t| d.pdf(t), f64::NEG_INFINITY, y, &spec).unwrap().value;
            let tm = d.trunc_mean(y).unwrap();
            assert!(((num / den) - tm).abs() < 1e-9 * tm.abs().max(1.0), "{m} {y}");
        }
    }

    #[test]
    fn bad_levels_rejected() {
        assert!(student_like_quantile(2.0, 0.0).is_err());
        assert!(student_like_quantile(2.0, 1.0).is_err());
        assert!(StudentLike::new(-1.0).is_err());
    }
}
