//! Monte Carlo risk and paired risk differences with common random numbers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{dense_y_grid, Estimator, EstimatorSpec};
use crate::exec::Execution;
use crate::loss::Loss;
use crate::model::sampling::{chunks, sample_chunk};
use crate::model::{derive_seed, ProblemSetup};

/// Knots of the shrink table attached for Monte Carlo evaluation.
pub const MC_TABLE_POINTS: usize = 801;
pub const MC_TABLE_RANGE: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub reps: usize,
}

/// Running sums, merged across chunks in chunk order.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.n += 1.0;
        let d = v - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (v - self.mean);
    }

    fn merge(self, o: Moments) -> Moments {
        if o.n == 0.0 {
            return self;
        }
        if self.n == 0.0 {
            return o;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * o.n / n,
            m2: self.m2 + o.m2 + d * d * self.n * o.n / n,
        }
    }

    fn estimate(self) -> McEstimate {
        let var = if self.n > 1.0 { self.m2 / (self.n - 1.0) } else { 0.0 };
        McEstimate {
            mean: self.mean,
            stderr: (var / self.n).sqrt(),
            reps: self.n as usize,
        }
    }
}

/// Builds the estimator of `spec`, with a wide shrink table for fast
/// evaluation at arbitrary `x/s`.
pub fn mc_estimator(spec: &EstimatorSpec, exec: Execution) -> Result<Estimator> {
    spec.build()?
        .with_table(&dense_y_grid(MC_TABLE_POINTS, MC_TABLE_RANGE), exec)
}

/// Mean of `φ(sample)` over `reps` draws at `λ`, chunked deterministically.
fn mc_mean<F>(setup: &ProblemSetup, lambda: f64, reps: usize, seed: u64, exec: Execution, phi: F) -> Result<McEstimate>
where
    F: Fn(f64, f64) -> Result<f64> + Sync,
{
    if reps == 0 {
        return Err(Error::invalid("Monte Carlo needs at least one replication"));
    }
    if !(lambda >= 0.0) {
        return Err(Error::invalid(format!("λ must be nonnegative, got {lambda}")));
    }
    setup.normalization()?;
    let parts = exec.try_map(&chunks(reps), |&(c, len)| -> Result<Moments> {
        let draws = sample_chunk(setup, lambda, seed, c, len)?;
        let mut m = Moments::default();
        for d in draws {
            m.push(phi(d.x, d.s)?);
        }
        Ok(m)
    })?;
    Ok(parts.into_iter().fold(Moments::default(), Moments::merge).estimate())
}

/// Monte Carlo risk of a built estimator at `λ`.
pub fn risk_mc_with(
    est: &Estimator,
    setup: &ProblemSetup,
    loss: &Loss,
    lambda: f64,
    reps: usize,
    seed: u64,
    exec: Execution,
) -> Result<McEstimate> {
    mc_mean(setup, lambda, reps, seed, exec, |x, s| Ok(loss.rho(est.evaluate(x, s)? - lambda)))
}

/// `(risk, stderr)` of `spec` at `λ`.
pub fn risk_mc(spec: &EstimatorSpec, lambda: f64, reps: usize, seed: u64) -> Result<(f64, f64)> {
    let exec = Execution::default();
    let est = mc_estimator(spec, exec)?;
    let r = risk_mc_with(&est, &spec.setup, &spec.loss, lambda, reps, seed, exec)?;
    Ok((r.mean, r.stderr))
}

/// Paired difference `R(λ, a) - R(λ, b)` on common draws.
#[allow(clippy::too_many_arguments)]
pub fn risk_difference_mc(
    a: &Estimator,
    b: &Estimator,
    setup: &ProblemSetup,
    loss: &Loss,
    lambda: f64,
    reps: usize,
    seed: u64,
    exec: Execution,
) -> Result<McEstimate> {
    mc_mean(setup, lambda, reps, seed, exec, |x, s| {
        Ok(loss.rho(a.evaluate(x, s)? - lambda) - loss.rho(b.evaluate(x, s)? - lambda))
    })
}

/// Monte Carlo risk curve; each `λ` index gets its own derived seed.
pub fn risk_curve_mc(
    spec: &EstimatorSpec,
    lambdas: &[f64],
    reps: usize,
    seed: u64,
    exec: Execution,
) -> Result<super::RiskCurve> {
    let est = mc_estimator(spec, exec)?;
    let mut risk = Vec::with_capacity(lambdas.len());
    let mut error = Vec::with_capacity(lambdas.len());
    for (i, &l) in lambdas.iter().enumerate() {
        let r = risk_mc_with(&est, &spec.setup, &spec.loss, l, reps, derive_seed(seed, i as u64), exec)?;
        risk.push(r.mean);
        error.push(r.stderr);
    }
    Ok(super::RiskCurve {
        lambda: lambdas.to_vec(),
        risk,
        error,
        method: super::RiskMethod::MonteCarlo,
        spec: spec.describe(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::EstimatorKind;
    use crate::model::ModelDensity;

    fn mre(n: usize) -> EstimatorSpec {
        EstimatorSpec::new(
            EstimatorKind::Mre,
            ProblemSetup::new(ModelDensity::Normal, n).unwrap(),
            Loss::power(2.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn deterministic_and_consistent() {
        let s = mre(3);
        let a = risk_mc(&s, 1.0, 200_000, 5).unwrap();
        let b = risk_mc(&s, 1.0, 200_000, 5).unwrap();
        assert_eq!(a, b);
        assert!((a.0 - 1.0).abs() < 4.0 * a.1, "{a:?}");
    }

    #[test]
    fn single_draw_is_the_loss() {
        let s = mre(1);
        let (r, e) = risk_mc(&s, 0.0, 1, 3).unwrap();
        let d = sample_chunk(&s.setup, 0.0, 3, 0, 1).unwrap()[0];
        assert_eq!(r, d.x * d.x);
        assert_eq!(e, 0.0);
    }

    #[test]
    fn moments_merge_matches_direct() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut all = Moments::default();
        xs.iter().for_each(|v| all.push(*v));
        let (mut a, mut b) = (Moments::default(), Moments::default());
        xs[..30].iter().for_each(|v| a.push(*v));
        xs[30..].iter().for_each(|v| b.push(*v));
        let m = a.merge(b);
        assert!((m.mean - all.mean).abs() < 1e-15 && (m.m2 - all.m2).abs() < 1e-12);
    }
}
