//! Frequentist risk `R(λ, δ) = E_{λ,1}[ρ(δ(X, S) - λ)]` by nested quadrature.
//!
//! With `y = x/s` and `s = r/√(1+y²)` every estimator in use is
//! `δ = s k(y)`, and
//! `R = K_n ∫ dy c^{n+1} ∫_0^∞ ρ(r c k(y) - λ) r^n f((r - λ y c)² + λ² c²) dr`
//! with `c = 1/√(1+y²)`.

use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::posterior::radial_scale;
use crate::estimators::{Estimator, EstimatorKind, EstimatorSpec};
use crate::exec::Execution;
use crate::loss::Loss;
use crate::model::ProblemSetup;
use crate::numerics::quadrature::{integrate_nested, integrate_split, split_pieces, Integral, QuadratureSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskMethod {
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskCurve {
    pub lambda: Vec<f64>,
    pub risk: Vec<f64>,
    /// Quadrature error bound or Monte Carlo standard error.
    pub error: Vec<f64>,
    pub method: RiskMethod,
    pub spec: serde_json::Value,
}

impl RiskCurve {
    pub fn to_csv(&self) -> String {
        let rows: Vec<Vec<f64>> = (0..self.lambda.len())
            .map(|i| vec![self.lambda[i], self.risk[i], self.error[i]])
            .collect();
        crate::io::csv(&["lambda", "risk", "error"], &rows)
    }
}

/// `y ↦ k(y)` with `δ(x, s) = s k(x/s)`, memoized by the bit pattern of `y`
/// so that repeated quadrature passes reuse shrink evaluations.
pub struct KCache<'a> {
    est: &'a Estimator,
    memo: Mutex<HashMap<u64, f64>>,
}

impl<'a> KCache<'a> {
    pub fn new(est: &'a Estimator) -> Self {
        Self {
            est,
            memo: Mutex::new(HashMap::new()),
        }
    }

    pub fn estimator(&self) -> &Estimator {
        self.est
    }

    pub fn k(&self, y: f64) -> Result<f64> {
        let c0 = self.est.c0();
        match self.est.kind() {
            EstimatorKind::Mre => Ok(y + c0),
            EstimatorKind::TruncatedMre => Ok((y + c0).max(0.0)),
            EstimatorKind::GenBayes { .. } => {
                let key = y.to_bits();
                if let Some(v) = self.memo.lock().expect("memo lock").get(&key) {
                    return Ok(*v);
                }
                let v = (y + c0 + self.est.g(y)?).max(0.0);
                self.memo.lock().expect("memo lock").insert(key, v);
                Ok(v)
            }
        }
    }
}

/// Outer breakpoints in `y`; independent of `λ` so that the memo is shared.
fn y_breaks(c0: f64) -> Vec<f64> {
    vec![-4.0, -1.0, -c0, 0.0, 1.0, 4.0]
}

/// Risk at `(μ, σ) = (λ, 1)` with its error bound.
pub fn risk_quadrature_with(
    kc: &KCache<'_>,
    setup: &ProblemSetup,
    loss: &Loss,
    lambda: f64,
    spec: &QuadratureSpec,
) -> Result<Integral> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(format!("λ must be finite and nonnegative, got {lambda}")));
    }
    let norm = setup.normalization()?;
    let n = setup.nf();
    let b = setup.bound();
    let scale = radial_scale(setup, n);
    let inner_spec = spec.inner();
    let slice = |y: f64| -> Result<Integral> {
        let k = kc.k(y)?;
        let c = 1.0 / y.hypot(1.0);
        let centre = lambda * y * c;
        let off = (lambda * c).powi(2);
        let mut breaks = vec![scale, centre, centre + scale, centre + 3.0 * scale];
        if k > 0.0 {
            breaks.push(lambda / (c * k));
        }
        let inner = integrate_split(
            |r| {
                if r <= 0.0 {
                    return 0.0;
                }
                let d = r - centre;
                let w = (n * r.ln() + b.ln_f(d * d + off)).exp();
                if w == 0.0 {
                    0.0
                } else {
                    loss.rho(r * c * k - lambda) * w
                }
            },
            0.0,
            f64::INFINITY,
            &breaks,
            &inner_spec,
        )?;
        let f = norm * c.powf(n + 1.0);
        Ok(Integral {
            value: inner.value * f,
            error: inner.error * f,
            abs_value: inner.abs_value * f,
            evaluations: inner.evaluations,
        })
    };
    let c0 = kc.estimator().c0();
    integrate_nested(slice, &split_pieces(f64::NEG_INFINITY, f64::INFINITY, &y_breaks(c0)), spec)
}

/// `(risk, error)` of `spec` at `λ`.
pub fn risk_quadrature(spec: &EstimatorSpec, lambda: f64, qspec: &QuadratureSpec) -> Result<(f64, f64)> {
    let est = spec.build()?;
    let kc = KCache::new(&est);
    let r = risk_quadrature_with(&kc, &spec.setup, &spec.loss, lambda, qspec)?;
    Ok((r.value, r.error))
}

/// Risk at general `(μ, σ)` computed directly in `(y, s)` without
/// rescaling, used to confirm that risk depends on `μ/σ` only.
pub fn risk_unscaled(
    kc: &KCache<'_>,
    setup: &ProblemSetup,
    loss: &Loss,
    mu: f64,
    sigma: f64,
    spec: &QuadratureSpec,
) -> Result<Integral> {
    if !(sigma > 0.0) {
        return Err(Error::invalid("σ must be positive"));
    }
    let norm = setup.normalization()?;
    let n = setup.nf();
    let b = setup.bound();
    let scale = sigma * radial_scale(setup, n);
    let inner_spec = spec.inner();
    let slice = |y: f64| -> Result<Integral> {
        let k = kc.k(y)?;
        let q = 1.0 + y * y;
        let centre = (mu * y / q).max(0.0);
        let mut breaks = vec![scale, centre, centre + scale / q.sqrt(), centre + 3.0 * scale / q.sqrt()];
        if k > 0.0 {
            breaks.push(mu / k);
        }
        let coef = norm / sigma.powf(n + 1.0);
        integrate_split(
            |s| {
                if s <= 0.0 {
                    return 0.0;
                }
                let z = (y * s - mu) / sigma;
                let v = s / sigma;
                let w = (n * s.ln() + b.ln_f(z * z + v * v)).exp();
                if w == 0.0 {
                    0.0
                } else {
                    coef * loss.rho((s * k - mu) / sigma) * w
                }
            },
            0.0,
            f64::INFINITY,
            &breaks,
            &inner_spec,
        )
    };
    let c0 = kc.estimator().c0();
    integrate_nested(slice, &split_pieces(f64::NEG_INFINITY, f64::INFINITY, &y_breaks(c0)), spec)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InvarianceCheck {
    pub lambda: f64,
    pub scaled: f64,
    pub unscaled: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Compares the risk at `(λ, 1)` with the risk at `(2λ, 2)`.
pub fn invariance_check(spec: &EstimatorSpec, lambda: f64, qspec: &QuadratureSpec) -> Result<InvarianceCheck> {
    let est = spec.build()?;
    let kc = KCache::new(&est);
    let a = risk_quadrature_with(&kc, &spec.setup, &spec.loss, lambda, qspec)?;
    let b = risk_unscaled(&kc, &spec.setup, &spec.loss, 2.0 * lambda, 2.0, qspec)?;
    let tolerance = 2.0 * (a.error + b.error) + 4.0 * qspec.rel_tol * a.value.abs();
    Ok(InvarianceCheck {
        lambda,
        scaled: a.value,
        unscaled: b.value,
        tolerance,
        passed: (a.value - b.value).abs() <= tolerance,
    })
}

/// Quadrature risk over a `λ` grid.
pub fn risk_curve_quadrature(
    spec: &EstimatorSpec,
    lambdas: &[f64],
    qspec: &QuadratureSpec,
    exec: Execution,
) -> Result<RiskCurve> {
    let est = spec.build()?;
    let kc = KCache::new(&est);
    let vals = exec.try_map(lambdas, |&l| risk_quadrature_with(&kc, &spec.setup, &spec.loss, l, qspec))?;
    Ok(RiskCurve {
        lambda: lambdas.to_vec(),
        risk: vals.iter().map(|i| i.value).collect(),
        error: vals.iter().map(|i| i.error).collect(),
        method: RiskMethod::Quadrature,
        spec: spec.describe(),
    })
}
