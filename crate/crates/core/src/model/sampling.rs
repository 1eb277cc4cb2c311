//! Seeded sampling of the sufficient statistic `(X, S)`.
//!
//! Draws are generated in fixed-size chunks, each from its own ChaCha
//! stream, so output depends only on the seed and never on the number of
//! worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::model::density::ModelDensity;
use crate::model::setup::ProblemSetup;
use crate::numerics::interp::Pchip;
use crate::numerics::quadrature::{integrate_1d, integrate_split, QuadratureSpec};
use crate::numerics::roots::{find_root_with, Expand, RootOptions};

pub const CHUNK: usize = 65_536;
const KNOTS: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleXS {
    pub x: f64,
    pub s: f64,
}

/// Inverse-cdf table for the radius `R` with density `∝ r^n f(r²)`, on the
/// compactified coordinate `u = r/(r + scale)`.
#[derive(Debug, Clone)]
pub struct RadialSampler {
    scale: f64,
    n: f64,
    total: f64,
    inverse: Pchip,
    cdf_lo: f64,
    cdf_hi: f64,
    bound: crate::model::density::BoundDensity,
}

const SEG_SPEC: QuadratureSpec = QuadratureSpec {
    rel_tol: 1e-11,
    abs_tol: 1e-300,
    max_subdivisions: 2000,
};

impl RadialSampler {
    pub(crate) fn build(setup: &ProblemSetup) -> Result<Self> {
        let n = setup.nf();
        let bound = setup.bound().clone();
        let total = setup.radial_integral(n)?;
        let scale = setup.radial_mode();
        let dens = |r: f64| {
            if r <= 0.0 {
                0.0
            } else {
                (n * r.ln() + bound.ln_f(r * r)).exp()
            }
        };
        let to_r = |u: f64| scale * u / (1.0 - u);
        let mut us = Vec::with_capacity(KNOTS + 1);
        let mut cdf = Vec::with_capacity(KNOTS + 1);
        us.push(0.0);
        cdf.push(0.0);
        let mut acc = 0.0;
        for i in 1..KNOTS {
            let (u0, u1) = ((i - 1) as f64 / KNOTS as f64, i as f64 / KNOTS as f64);
            acc += integrate_1d(dens, to_r(u0), to_r(u1), &SEG_SPEC)?.value / total;
            if acc > *cdf.last().unwrap() && acc < 1.0 {
                us.push(u1);
                cdf.push(acc);
            }
        }
        let cdf_lo = cdf.get(1).copied().unwrap_or(0.0);
        let cdf_hi = *cdf.last().unwrap();
        let inverse = Pchip::new(cdf, us)?;
        Ok(Self {
            scale,
            n,
            total,
            inverse,
            cdf_lo,
            cdf_hi,
            bound,
        })
    }

    fn radial_density(&self, r: f64) -> f64 {
        if r <= 0.0 || !r.is_finite() {
            return 0.0;
        }
        let v = (self.n * r.ln() + self.bound.ln_f(r * r)).exp();
        if v.is_finite() {
            v
        } else {
            0.0
        }
    }

    /// Exact inversion for the extreme tails outside the table.
    fn exact_quantile(&self, q: f64) -> Result<f64> {
        let upper = q > 0.5;
        let target = if upper { 1.0 - q } else { q };
        let g = |lr: f64| -> Result<f64> {
            let r = lr.exp();
            let breaks = [0.25 * self.scale, self.scale, 4.0 * self.scale];
            let dens = |t: f64| self.radial_density(t);
            let mass = if upper {
                integrate_split(dens, r, f64::INFINITY, &breaks, &SEG_SPEC)?.value
            } else {
                integrate_split(dens, 0.0, r, &breaks, &SEG_SPEC)?.value
            };
            Ok((mass / self.total).max(1e-320).ln() - target.ln())
        };
        let start = self.scale.ln();
        let lr = find_root_with(
            g,
            start - 1.0,
            start + 1.0,
            RootOptions {
                tol: 1e-12,
                max_iter: 200,
                expand: Expand::Both,
                max_doublings: 60,
            },
        )?;
        Ok(lr.exp())
    }

    pub fn quantile(&self, q: f64) -> Result<f64> {
        if q < self.cdf_lo || q > self.cdf_hi {
            return self.exact_quantile(q);
        }
        let u = self.inverse.eval(q);
        Ok(self.scale * u / (1.0 - u))
    }
}

/// Mixes a seed with a task index so that substreams are well separated.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

/// Draws chunk `chunk` (of length `len ≤ CHUNK`) at `(μ, σ) = (λ, 1)`.
pub fn sample_chunk(setup: &ProblemSetup, lambda: f64, seed: u64, chunk: usize, len: usize) -> Result<Vec<SampleXS>> {
    let mut rng = chunk_rng(seed, chunk);
    let n = setup.n();
    let mut out = Vec::with_capacity(len);
    if *setup.density() == ModelDensity::Normal {
        let chi = ChiSquared::new(n as f64).map_err(|e| Error::invalid(e.to_string()))?;
        for _ in 0..len {
            let z: f64 = rng.sample(StandardNormal);
            let s2: f64 = chi.sample(&mut rng);
            out.push(SampleXS {
                x: lambda + z,
                s: s2.sqrt(),
            });
        }
        return Ok(out);
    }
    let sampler = setup.sampler()?;
    for _ in 0..len {
        let q: f64 = rng.random::<f64>();
        let q = q.max(f64::MIN_POSITIVE);
        let r = sampler.quantile(q)?;
        let z1: f64 = rng.sample(StandardNormal);
        let mut rest = 0.0;
        for _ in 0..n {
            let z: f64 = rng.sample(StandardNormal);
            rest += z * z;
        }
        let norm = (z1 * z1 + rest).sqrt();
        out.push(SampleXS {
            x: lambda + r * z1 / norm,
            s: r * rest.sqrt() / norm,
        });
    }
    Ok(out)
}

/// `(offset, len)` of each chunk covering `count` draws.
pub fn chunks(count: usize) -> Vec<(usize, usize)> {
    (0..count.div_ceil(CHUNK))
        .map(|c| (c, CHUNK.min(count - c * CHUNK)))
        .collect()
}

pub fn sample_xs(setup: &ProblemSetup, lambda: f64, count: usize, seed: u64) -> Result<Vec<SampleXS>> {
    sample_xs_with(Execution::default(), setup, lambda, count, seed)
}

pub fn sample_xs_with(
    exec: Execution,
    setup: &ProblemSetup,
    lambda: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<SampleXS>> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(format!("λ must be finite and nonnegative, got {lambda}")));
    }
    if count == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    setup.normalization()?;
    let parts = exec.try_map(&chunks(count), |&(c, len)| sample_chunk(setup, lambda, seed, c, len))?;
    Ok(parts.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_thread_independent() {
        let s = ProblemSetup::new(ModelDensity::student(3.0).unwrap(), 2).unwrap();
        let a = sample_xs_with(Execution::Parallel, &s, 1.0, 70_000, 9).unwrap();
        let b = sample_xs_with(Execution::Sequential, &s, 1.0, 70_000, 9).unwrap();
        assert_eq!(a, b);
        let c = sample_xs(&s, 1.0, 100, 10).unwrap();
        assert_ne!(a[..100], c[..]);
    }

    #[test]
    fn radial_quantiles_invert_cdf() {
        let s = ProblemSetup::new(ModelDensity::kotz(-0.3, 1.0).unwrap(), 2).unwrap();
        let sm = s.sampler().unwrap();
        for q in [1e-9, 1e-4, 0.1, 0.5, 0.9, 1.0 - 1e-6] {
            let r = sm.quantile(q).unwrap();
            let mass = integrate_1d(|t| sm.radial_density(t), 0.0, r, &SEG_SPEC).unwrap().value / sm.total;
            assert!((mass - q).abs() < 1e-6 * q.max(1e-3), "q={q} mass={mass}");
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        let s = ProblemSetup::new(ModelDensity::Normal, 1).unwrap();
        assert!(sample_xs(&s, -1.0, 10, 0).is_err());
        assert!(sample_xs(&s, 0.0, 0, 0).is_err());
    }

    #[test]
    fn chunk_layout() {
        assert_eq!(chunks(10), vec![(0, 10)]);
        assert_eq!(chunks(CHUNK + 1), vec![(0, CHUNK), (1, 1)]);
    }
}
