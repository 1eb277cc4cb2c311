//! A density bound to a residual dimension, with its normalizing constant.

use std::f64::consts::PI;
use std::sync::OnceLock;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::model::density::{BoundDensity, ModelDensity};
use crate::model::sampling::RadialSampler;
use crate::numerics::quadrature::{integrate_pieces, split_pieces, QuadratureSpec};

#[derive(Debug)]
pub struct ProblemSetup {
    n: usize,
    density: ModelDensity,
    bound: BoundDensity,
    radial_mode: f64,
    normalization: OnceLock<Result<f64>>,
    sampler: OnceLock<Result<RadialSampler>>,
}

impl Clone for ProblemSetup {
    fn clone(&self) -> Self {
        ProblemSetup::new(self.density.clone(), self.n).expect("validated on first construction")
    }
}

impl PartialEq for ProblemSetup {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.density == other.density
    }
}

/// `∫_0^π sin^{n-1}θ dθ = √π Γ(n/2) / Γ((n+1)/2)`.
pub fn half_sphere_constant(n: usize) -> f64 {
    let n = n as f64;
    (0.5 * PI.ln() + ln_gamma(0.5 * n) - ln_gamma(0.5 * (n + 1.0))).exp()
}

const NORM_SPEC: QuadratureSpec = QuadratureSpec {
    rel_tol: 1e-12,
    abs_tol: 1e-300,
    max_subdivisions: 2000,
};

impl ProblemSetup {
    pub fn new(density: ModelDensity, n: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::invalid("residual dimension n must be at least 1"));
        }
        density.validate()?;
        let bound = density.bind(n);
        let radial_mode = bound.radial_mode();
        Ok(Self {
            n,
            density,
            bound,
            radial_mode,
            normalization: OnceLock::new(),
            sampler: OnceLock::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nf(&self) -> f64 {
        self.n as f64
    }

    pub fn density(&self) -> &ModelDensity {
        &self.density
    }

    pub fn bound(&self) -> &BoundDensity {
        &self.bound
    }

    #[inline]
    pub fn f(&self, t: f64) -> f64 {
        self.bound.f(t)
    }

    #[inline]
    pub fn ln_f(&self, t: f64) -> f64 {
        self.bound.ln_f(t)
    }

    /// Mode of the radial density `r^n f(r²)`.
    pub fn radial_mode(&self) -> f64 {
        self.radial_mode
    }

    /// `∫_0^∞ r^k f(r²) dr`.
    pub fn radial_integral(&self, k: f64) -> Result<f64> {
        if let Some(false) = self.bound.moment_exists(0.5 * (k - 1.0)) {
            return Err(Error::NonNormalizable(format!(
                "∫ r^{k} f(r²) dr diverges for {} with n = {}",
                self.density.name(),
                self.n
            )));
        }
        let rm = self.radial_mode;
        let pieces = split_pieces(0.0, f64::INFINITY, &[0.25 * rm, rm, 4.0 * rm]);
        let r = integrate_pieces(
            |r| {
                if r == 0.0 {
                    0.0
                } else {
                    (k * r.ln() + self.bound.ln_f(r * r)).exp()
                }
            },
            &pieces,
            &NORM_SPEC,
        )
        .map_err(|e| match e {
            Error::Divergent(m) => Error::NonNormalizable(m),
            Error::AccuracyNotReached { estimate, error } => Error::NonNormalizable(format!(
                "radial integral did not converge (estimate {estimate:e}, error {error:e})"
            )),
            other => other,
        })?;
        if !(r.value > 0.0) || !r.value.is_finite() {
            return Err(Error::NonNormalizable(format!("radial integral is {}", r.value)));
        }
        Ok(r.value)
    }

    /// `K_n` making `K_n s^{n-1} f(x² + s²)` a probability density on ℝ×ℝ⁺.
    pub fn normalization(&self) -> Result<f64> {
        self.normalization
            .get_or_init(|| {
                let radial = self.radial_integral(self.nf())?;
                Ok(1.0 / (half_sphere_constant(self.n) * radial))
            })
            .clone()
    }

    /// Density of `(X, S)` at `(x, s)` under parameters `(μ, σ)`.
    pub fn joint_density(&self, mu: f64, sigma: f64, x: f64, s: f64) -> Result<f64> {
        if !(sigma > 0.0) || !(s > 0.0) {
            return Err(Error::invalid(format!("need σ > 0 and s > 0 (σ = {sigma}, s = {s})")));
        }
        let k = self.normalization()?;
        let n = self.nf();
        let z = (x - mu) / sigma;
        let w = s / sigma;
        Ok(k * s.powf(n - 1.0) / sigma.powf(n + 1.0) * self.f(z * z + w * w))
    }

    pub(crate) fn sampler(&self) -> Result<&RadialSampler> {
        self.sampler
            .get_or_init(|| RadialSampler::build(self))
            .as_ref()
            .map_err(Clone::clone)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::quadrature::integrate_2d_halfplane;

    #[test]
    fn normal_one_dim_constant() {
        let s = ProblemSetup::new(ModelDensity::Normal, 1).unwrap();
        assert!((s.normalization().unwrap() - 1.0 / PI).abs() < 1e-14);
        let j = s.joint_density(0.0, 1.0, 0.0, 1.0).unwrap();
        assert!((j - (-0.5f64).exp() / PI).abs() < 1e-15);
    }

    #[test]
    fn half_sphere_constant_values() {
        assert!((half_sphere_constant(1) - PI).abs() < 1e-14);
        assert!((half_sphere_constant(2) - 2.0).abs() < 1e-14);
        assert!((half_sphere_constant(3) - PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn student_constant_matches_brute_force() {
        let s = ProblemSetup::new(ModelDensity::student(1.0).unwrap(), 2).unwrap();
        let k = s.normalization().unwrap();
        let spec = QuadratureSpec::two_dim().with_rel_tol(1e-10);
        let brute = integrate_2d_halfplane(|u, v| v * s.f(u * u + v * v), &spec).unwrap();
        assert!((k * brute.value - 1.0).abs() < 1e-8, "{}", k * brute.value);
    }

    #[test]
    fn location_scale_identity() {
        let s = ProblemSetup::new(ModelDensity::student(3.0).unwrap(), 3).unwrap();
        for (mu, sigma, x, v) in [(0.5, 2.0, 1.0, 0.3), (3.0, 0.5, -1.0, 2.0)] {
            let lhs = s.joint_density(mu, sigma, x, v).unwrap() * sigma * sigma;
            let rhs = s.joint_density(0.0, 1.0, (x - mu) / sigma, v / sigma).unwrap();
            assert!((lhs - rhs).abs() <= 4.0 * f64::EPSILON * rhs);
        }
    }

    #[test]
    fn rejects_zero_dimension() {
        assert!(ProblemSetup::new(ModelDensity::Normal, 0).is_err());
    }

    #[test]
    fn non_normalizable_generator() {
        // f(t) = t^{-0.5}: r^n f(r²) = r^{n-1} is not integrable
        let d = ModelDensity::custom(-0.5, 0.0, 1.0).unwrap();
        let s = ProblemSetup::new(d, 1).unwrap();
        assert!(matches!(s.normalization(), Err(Error::NonNormalizable(_))));
    }
}
