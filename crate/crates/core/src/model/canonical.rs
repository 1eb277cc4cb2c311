//! Reduction of an i.i.d. sample to the canonical `(X, S)` form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Canonical {
    pub x: f64,
    pub s: f64,
    pub n: usize,
    /// Sample size `N = n + 1`.
    pub size: usize,
}

impl Canonical {
    /// Maps an estimate of `μ = √N θ` back to the common location `θ`.
    pub fn theta(&self, mu_hat: f64) -> f64 {
        mu_hat / (self.size as f64).sqrt()
    }
}

/// `x = √N ȳ`, `s = ‖y - ȳ‖`, `n = N - 1`.
pub fn canonicalize(sample: &[f64]) -> Result<Canonical> {
    let size = sample.len();
    if size < 2 {
        return Err(Error::invalid("canonical reduction needs at least two observations"));
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("sample contains non-finite values"));
    }
    let nn = size as f64;
    let mean = sample.iter().sum::<f64>() / nn;
    let ss: f64 = sample.iter().map(|y| (y - mean) * (y - mean)).sum();
    Ok(Canonical {
        x: nn.sqrt() * mean,
        s: ss.sqrt(),
        n: size - 1,
        size,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_sample() {
        let c = canonicalize(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!((c.x, c.s, c.n), (2.0, 0.0, 3));
    }

    #[test]
    fn two_points() {
        let c = canonicalize(&[0.0, 2.0]).unwrap();
        assert!((c.x - 2f64.sqrt()).abs() < 1e-15);
        assert!((c.s - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(c.n, 1);
        assert!((c.theta(c.x) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn too_short() {
        assert!(canonicalize(&[1.0]).is_err());
    }
}
