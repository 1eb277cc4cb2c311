//! The MRE estimator, its truncation at zero and the generalized Bayes
//! estimators `δ_{π_l}` under the priors `σ^{-(l+1)}` on `μ ≥ 0, σ > 0`.

pub mod c0;
pub mod checks;
pub(crate) mod free;
pub(crate) mod posterior;
pub mod shrink;
pub mod table;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use c0::{c0, c0_with, check_existence, C0Method};
pub use checks::{g_ordering_check, upper_bound_check, BoundCheckReport, OrderingReport};
pub use shrink::{b_function, g_pi, Method, Provenance, ShrinkFunction};
pub use table::{dense_y_grid, default_y_grid, g_pi_table, KFunction, ShrinkTable, MONOTONE_TOL};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::loss::Loss;
use crate::model::ProblemSetup;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EstimatorKind {
    /// `X + c0 S`.
    Mre,
    /// `max(0, X + c0 S)`.
    TruncatedMre,
    /// `X + c0 S + g_{π_l}(X/S) S`.
    GenBayes { l: f64 },
}

impl EstimatorKind {
    pub fn label(&self) -> String {
        match self {
            EstimatorKind::Mre => "mre".into(),
            EstimatorKind::TruncatedMre => "truncated_mre".into(),
            EstimatorKind::GenBayes { l } => format!("gen_bayes(l={l})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EstimatorSpec {
    pub kind: EstimatorKind,
    pub setup: ProblemSetup,
    pub loss: Loss,
}

impl EstimatorSpec {
    pub fn new(kind: EstimatorKind, setup: ProblemSetup, loss: Loss) -> Result<Self> {
        if let EstimatorKind::GenBayes { l } = kind {
            let lo = -(setup.nf() - 1.0);
            if !l.is_finite() || l < lo {
                return Err(Error::invalid(format!("prior index l = {l} must be at least {lo}")));
            }
        }
        Ok(Self { kind, setup, loss })
    }

    pub fn build(&self) -> Result<Estimator> {
        Estimator::new(self)
    }

    /// JSON description of the spec, embedded in reports for provenance.
    pub fn describe(&self) -> serde_json::Value {
        serde_json::json!({
            "estimator": self.kind,
            "model": self.setup.density(),
            "n": self.setup.n(),
            "loss": self.loss,
        })
    }
}

/// A ready-to-evaluate estimator. The exact shrink function is used unless
/// a table is attached with [`Estimator::with_table`].
#[derive(Debug, Clone)]
pub struct Estimator {
    kind: EstimatorKind,
    c0: f64,
    shrink: Option<ShrinkFunction>,
    table: Option<Arc<ShrinkTable>>,
}

impl Estimator {
    pub fn new(spec: &EstimatorSpec) -> Result<Self> {
        let n = spec.setup.nf();
        match spec.kind {
            EstimatorKind::Mre | EstimatorKind::TruncatedMre => Ok(Self {
                kind: spec.kind,
                c0: c0::c0(&spec.setup, &spec.loss, n)?,
                shrink: None,
                table: None,
            }),
            EstimatorKind::GenBayes { l } => {
                let shrink = ShrinkFunction::new(&spec.setup, &spec.loss, l)?;
                Ok(Self {
                    kind: spec.kind,
                    c0: shrink.c0(),
                    shrink: Some(shrink),
                    table: None,
                })
            }
        }
    }

    /// Attaches an interpolation table of the shrink function on `grid`.
    pub fn with_table(mut self, grid: &[f64], exec: Execution) -> Result<Self> {
        if let Some(s) = &self.shrink {
            self.table = Some(Arc::new(ShrinkTable::build(s, grid, exec)?));
        }
        Ok(self)
    }

    pub fn kind(&self) -> EstimatorKind {
        self.kind
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn shrink(&self) -> Option<&ShrinkFunction> {
        self.shrink.as_ref()
    }

    pub fn table(&self) -> Option<&ShrinkTable> {
        self.table.as_deref()
    }

    /// Shrink value at `y`: the table if attached, else the exact function;
    /// zero for the equivariant estimators.
    pub fn g(&self, y: f64) -> Result<f64> {
        match (&self.table, &self.shrink) {
            (Some(t), _) => Ok(t.eval(y)),
            (None, Some(s)) => s.eval(y),
            (None, None) => Ok(0.0),
        }
    }

    pub fn evaluate(&self, x: f64, s: f64) -> Result<f64> {
        if !(s > 0.0) || !s.is_finite() || !x.is_finite() {
            return Err(Error::invalid(format!("estimator needs finite x and s > 0 (x = {x}, s = {s})")));
        }
        let base = x + self.c0 * s;
        match self.kind {
            EstimatorKind::Mre => Ok(base),
            EstimatorKind::TruncatedMre => Ok(base.max(0.0)),
            EstimatorKind::GenBayes { .. } => {
                let d = base + self.g(x / s)? * s;
                let slack = 1e-12 * (x.abs() + s);
                if d < -slack {
                    return Err(Error::InternalConsistency(format!(
                        "generalized Bayes estimate {d} is negative at (x, s) = ({x}, {s})"
                    )));
                }
                Ok(d.max(0.0))
            }
        }
    }
}

/// One-off evaluation of `spec` at `(x, s)`.
pub fn evaluate(spec: &EstimatorSpec, x: f64, s: f64) -> Result<f64> {
    spec.build()?.evaluate(x, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelDensity;

    fn spec(kind: EstimatorKind, n: usize, loss: Loss) -> EstimatorSpec {
        EstimatorSpec::new(kind, ProblemSetup::new(ModelDensity::Normal, n).unwrap(), loss).unwrap()
    }

    #[test]
    fn oracle_values() {
        let sq = Loss::power(2.0).unwrap();
        assert_eq!(evaluate(&spec(EstimatorKind::Mre, 1, sq.clone()), 2.5, 1.0).unwrap(), 2.5);
        assert_eq!(evaluate(&spec(EstimatorKind::TruncatedMre, 1, sq.clone()), -1.0, 2.0).unwrap(), 0.0);
        let gb = evaluate(&spec(EstimatorKind::GenBayes { l: 0.0 }, 1, sq), 1.0, 1.0).unwrap();
        let g1 = 0.25 / (0.25 + 3.0 * std::f64::consts::PI / 8.0);
        assert!((gb - 1.0 - g1).abs() < 1e-12);
    }

    #[test]
    fn rejects_nonpositive_scale() {
        let e = spec(EstimatorKind::Mre, 1, Loss::power(2.0).unwrap()).build().unwrap();
        assert!(e.evaluate(1.0, 0.0).is_err());
    }

    #[test]
    fn kind_json() {
        let k: EstimatorKind = serde_json::from_str(r#"{"kind":"gen_bayes","l":-1.0}"#).unwrap();
        assert_eq!(k, EstimatorKind::GenBayes { l: -1.0 });
        assert!(serde_json::from_str::<EstimatorKind>(r#"{"kind":"bayes"}"#).is_err());
    }
}
