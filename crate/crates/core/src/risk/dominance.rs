//! Pointwise risk comparison of two estimators over a `λ` grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::EstimatorSpec;
use crate::exec::Execution;
use crate::model::derive_seed;
use crate::numerics::quadrature::QuadratureSpec;

use super::curve::{risk_quadrature_with, KCache, RiskMethod};
use super::mc::{mc_estimator, risk_difference_mc};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// `R(λ, A) < R(λ, B)` beyond the combined error.
    Dominates,
    /// The difference lies within the combined error.
    Indeterminate,
    /// `R(λ, A) > R(λ, B)` beyond the combined error.
    DoesNot,
}

impl Verdict {
    pub fn classify(difference: f64, error: f64) -> Verdict {
        if difference < -error {
            Verdict::Dominates
        } else if difference > error {
            Verdict::DoesNot
        } else {
            Verdict::Indeterminate
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DominancePoint {
    pub lambda: f64,
    /// `R(λ, A)`; for Monte Carlo, `NaN` (only the paired difference is estimated).
    pub risk_a: f64,
    pub risk_b: f64,
    pub difference: f64,
    /// Combined error bound, or the Monte Carlo band.
    pub error: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub method: RiskMethod,
    pub spec_a: serde_json::Value,
    pub spec_b: serde_json::Value,
    pub points: Vec<DominancePoint>,
}

impl DominanceReport {
    /// No point where `A` is worse beyond the error.
    pub fn no_worse(&self) -> bool {
        self.points.iter().all(|p| p.verdict != Verdict::DoesNot)
    }

    pub fn max_error(&self) -> f64 {
        self.points.iter().map(|p| p.error).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let rows: Vec<Vec<f64>> = self
            .points
            .iter()
            .map(|p| vec![p.lambda, p.difference, p.error])
            .collect();
        crate::io::csv(&["lambda", "value", "error"], &rows)
    }
}

fn same_problem(a: &EstimatorSpec, b: &EstimatorSpec) -> Result<()> {
    if a.setup.density() != b.setup.density() || a.setup.n() != b.setup.n() {
        return Err(Error::invalid("dominance check needs a common model and sample size"));
    }
    if a.loss.name() != b.loss.name() {
        return Err(Error::invalid("dominance check needs a common loss"));
    }
    Ok(())
}

/// Quadrature comparison of `A` against `B`.
pub fn dominance_check(
    a: &EstimatorSpec,
    b: &EstimatorSpec,
    lambdas: &[f64],
    qspec: &QuadratureSpec,
    exec: Execution,
) -> Result<DominanceReport> {
    same_problem(a, b)?;
    let (ea, eb) = (a.build()?, b.build()?);
    let (ka, kb) = (KCache::new(&ea), KCache::new(&eb));
    let points = exec.try_map(lambdas, |&l| -> Result<DominancePoint> {
        let ra = risk_quadrature_with(&ka, &a.setup, &a.loss, l, qspec)?;
        let rb = risk_quadrature_with(&kb, &b.setup, &b.loss, l, qspec)?;
        let difference = ra.value - rb.value;
        let error = ra.error + rb.error;
        Ok(DominancePoint {
            lambda: l,
            risk_a: ra.value,
            risk_b: rb.value,
            difference,
            error,
            verdict: Verdict::classify(difference, error),
        })
    })?;
    Ok(DominanceReport {
        method: RiskMethod::Quadrature,
        spec_a: a.describe(),
        spec_b: b.describe(),
        points,
    })
}

/// Monte Carlo comparison with common random numbers; the error band is
/// `band` standard errors of the paired difference.
pub fn dominance_check_mc(
    a: &EstimatorSpec,
    b: &EstimatorSpec,
    lambdas: &[f64],
    reps: usize,
    seed: u64,
    band: f64,
    exec: Execution,
) -> Result<DominanceReport> {
    same_problem(a, b)?;
    let (ea, eb) = (mc_estimator(a, exec)?, mc_estimator(b, exec)?);
    let mut points = Vec::with_capacity(lambdas.len());
    for (i, &l) in lambdas.iter().enumerate() {
        let d = risk_difference_mc(&ea, &eb, &a.setup, &a.loss, l, reps, derive_seed(seed, i as u64), exec)?;
        let error = band * d.stderr;
        points.push(DominancePoint {
            lambda: l,
            risk_a: f64::NAN,
            risk_b: f64::NAN,
            difference: d.mean,
            error,
            verdict: Verdict::classify(d.mean, error),
        });
    }
    Ok(DominanceReport {
        method: RiskMethod::MonteCarlo,
        spec_a: a.describe(),
        spec_b: b.describe(),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::EstimatorKind;
    use crate::loss::Loss;
    use crate::model::{ModelDensity, ProblemSetup};

    fn spec(kind: EstimatorKind, n: usize) -> EstimatorSpec {
        EstimatorSpec::new(kind, ProblemSetup::new(ModelDensity::Normal, n).unwrap(), Loss::power(2.0).unwrap())
            .unwrap()
    }

    #[test]
    fn verdicts() {
        assert_eq!(Verdict::classify(-1.0, 0.1), Verdict::Dominates);
        assert_eq!(Verdict::classify(0.05, 0.1), Verdict::Indeterminate);
        assert_eq!(Verdict::classify(1.0, 0.1), Verdict::DoesNot);
    }

    #[test]
    fn truncation_improves_mre() {
        let r = dominance_check(
            &spec(EstimatorKind::TruncatedMre, 3),
            &spec(EstimatorKind::Mre, 3),
            &[0.0, 1.0, 3.0],
            &QuadratureSpec::two_dim(),
            Execution::Sequential,
        )
        .unwrap();
        assert!(r.no_worse(), "{r:?}");
        assert_eq!(r.points[0].verdict, Verdict::Dominates);
    }

    #[test]
    fn rejects_mismatched_problems() {
        let r = dominance_check(
            &spec(EstimatorKind::Mre, 3),
            &spec(EstimatorKind::Mre, 2),
            &[0.0],
            &QuadratureSpec::two_dim(),
            Execution::Sequential,
        );
        assert!(r.is_err());
    }
}
