//! Shrink functions `g_{π_l}` of the generalized Bayes estimators
//! `δ_{π_l}(X, S) = X + c0 S + g_{π_l}(X/S) S`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::c0::{c0_with, check_existence, polish, root_in, scan_min, C0Method};
use crate::estimators::free::FreeObjective;
use crate::estimators::posterior::{PosteriorKernel, COARSE, TIGHT};
use crate::loss::Loss;
use crate::model::ProblemSetup;
use crate::numerics::roots::Expand;
use crate::numerics::student_like::StudentLike;

/// Computational route to `g_{π_l}(y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Truncated mean (squared error) or truncated quantile (linear loss).
    ClosedForm,
    /// Root of the density-free stationarity condition `J'(h) = 0`.
    FreeRoot,
    /// Scan-and-refine minimization of the density-free objective.
    FreeMin,
    /// Root of `B_{n+l}(y, z) = 0` by nested quadrature under `f`.
    PosteriorRoot,
    /// Scan-and-refine minimization of the posterior loss under `f`.
    PosteriorMin,
}

/// Coarse classification recorded in tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    RootSolve,
    PosteriorMin,
}

impl Method {
    pub fn provenance(self) -> Provenance {
        match self {
            Method::ClosedForm => Provenance::ClosedForm,
            Method::FreeRoot | Method::PosteriorRoot => Provenance::RootSolve,
            Method::FreeMin | Method::PosteriorMin => Provenance::PosteriorMin,
        }
    }

    fn uses_density(self) -> bool {
        matches!(self, Method::PosteriorRoot | Method::PosteriorMin)
    }
}

/// `g_{π_l}` for one `(setup, loss, l)` together with its constants.
#[derive(Debug, Clone)]
pub struct ShrinkFunction {
    setup: ProblemSetup,
    loss: Loss,
    l: f64,
    m: f64,
    method: Method,
    c0: f64,
    c0_m: f64,
    boundary: bool,
}

impl ShrinkFunction {
    pub fn new(setup: &ProblemSetup, loss: &Loss, l: f64) -> Result<Self> {
        let method = Self::default_method(setup, loss, l);
        Self::with_method(setup, loss, l, method)
    }

    /// Default dispatch: closed forms where they exist, the density-free
    /// objective for other power losses, nested quadrature for custom ones.
    /// The boundary prior `l = -(n-1)` always goes through minimization.
    pub fn default_method(setup: &ProblemSetup, loss: &Loss, l: f64) -> Method {
        let boundary = l == -(setup.nf() - 1.0);
        match loss.asym() {
            None if boundary || !loss.is_convex() => Method::PosteriorMin,
            None => Method::PosteriorRoot,
            Some(_) if boundary => Method::FreeMin,
            Some((p, _, _)) if p == 1.0 || (p == 2.0 && loss.is_even()) => Method::ClosedForm,
            Some((p, _, _)) if p < 1.0 => Method::FreeMin,
            Some(_) => Method::FreeRoot,
        }
    }

    pub fn with_method(setup: &ProblemSetup, loss: &Loss, l: f64, method: Method) -> Result<Self> {
        let n = setup.nf();
        if !l.is_finite() || l < -(n - 1.0) {
            return Err(Error::invalid(format!(
                "prior index l = {l} is below the lower bound -(n-1) = {}",
                -(n - 1.0)
            )));
        }
        let m = n + l;
        check_existence(setup, loss, n)?;
        check_existence(setup, loss, m)?;
        let c0_method = match method {
            Method::ClosedForm => {
                let ok = match loss.asym() {
                    Some((p, _, _)) => p == 1.0 || (p == 2.0 && loss.is_even()),
                    None => false,
                };
                if !ok {
                    return Err(Error::invalid(format!("no closed-form shrink function for {}", loss.name())));
                }
                C0Method::Exact
            }
            Method::FreeRoot | Method::FreeMin if loss.asym().is_none() => {
                return Err(Error::invalid("density-free routes need a power-type loss"));
            }
            Method::FreeRoot if loss.is_even() => C0Method::Exact,
            Method::FreeRoot => C0Method::FreeRoot,
            Method::FreeMin => C0Method::FreeMin,
            Method::PosteriorRoot if !loss.is_convex() && loss.exponent().is_none() => {
                return Err(Error::invalid("the B-root route needs a convex loss"));
            }
            Method::PosteriorRoot => C0Method::PosteriorRoot,
            Method::PosteriorMin => C0Method::PosteriorMin,
        };
        let c0_method = if loss.is_even() && !method.uses_density() {
            C0Method::Exact
        } else {
            c0_method
        };
        let c0 = c0_with(setup, loss, n, c0_method)?;
        let c0_m = if m == n { c0 } else { c0_with(setup, loss, m, c0_method)? };
        Ok(Self {
            setup: setup.clone(),
            loss: loss.clone(),
            l,
            m,
            method,
            c0,
            c0_m,
            boundary: l == -(n - 1.0),
        })
    }

    pub fn setup(&self) -> &ProblemSetup {
        &self.setup
    }

    pub fn loss(&self) -> &Loss {
        &self.loss
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// `c0(n)`, the MRE constant of the problem.
    pub fn c0(&self) -> f64 {
        self.c0
    }

    /// `c0(n + l)`.
    pub fn c0_posterior(&self) -> f64 {
        self.c0_m
    }

    /// `lim_{y→∞} g(y) = -c0(n) + c0(n+l)`.
    pub fn right_limit(&self) -> f64 {
        self.c0_m - self.c0
    }

    /// True at the boundary prior `l = -(n-1)`.
    pub fn is_boundary(&self) -> bool {
        self.boundary
    }

    /// `g_{π_l}(y)`.
    pub fn eval(&self, y: f64) -> Result<f64> {
        if y.is_nan() {
            return Err(Error::invalid("shrink function evaluated at NaN"));
        }
        if y == f64::INFINITY {
            return Ok(self.right_limit());
        }
        let h = match self.method {
            Method::ClosedForm => self.closed_form_h(y)?,
            Method::FreeRoot => {
                let j = FreeObjective::new(&self.loss, self.m)?;
                // J'(-y) < 0: every t ≤ y has t + h ≤ 0 there
                root_in(|h| j.deriv(h, y), -y, -y + 1.0, Expand::Upper)?
            }
            Method::FreeMin => {
                let j = FreeObjective::new(&self.loss, self.m)?;
                let (lo, hi) = self.min_window(y);
                let scan = j.coarse();
                let min = scan_min(|h| scan.value(h, y), lo, hi)?;
                polish(|h| j.deriv(h, y), &min)?
            }
            Method::PosteriorRoot => {
                let k = PosteriorKernel::new(&self.setup, &self.loss, self.m)?;
                root_in(|h| Ok(k.deriv_integral(h, y, &TIGHT)?.value), -y, -y + 1.0, Expand::Upper)?
            }
            Method::PosteriorMin => {
                let k = PosteriorKernel::new(&self.setup, &self.loss, self.m)?;
                let (lo, hi) = self.min_window(y);
                let min = scan_min(|h| Ok(k.loss_integral(h, y, &COARSE)?.value), lo, hi)?;
                polish(|h| Ok(k.deriv_integral(h, y, &TIGHT)?.value), &min)?
            }
        };
        Ok(h - self.c0)
    }

    /// Search window for `h = c0 + g`; its lower end keeps `δ ≥ 0`.
    fn min_window(&self, y: f64) -> (f64, f64) {
        (-y - 1.0, y.abs() + self.c0.abs() + 10.0)
    }

    fn closed_form_h(&self, y: f64) -> Result<f64> {
        let (p, c1, c2) = self.loss.asym().expect("closed form requires a power loss");
        if p == 2.0 {
            // h = -E[T | T ≤ y], T of index n + l + 1
            return Ok(-StudentLike::new(self.m + 1.0)?.trunc_mean(y)?);
        }
        // h = -F^{-1}(c2/(c1+c2) F(y)), T of index n + l
        let t = StudentLike::new(self.m)?;
        let q = c2 / (c1 + c2) * t.cdf(y);
        if q <= 0.0 {
            return Err(Error::AccuracyNotReached {
                estimate: f64::NAN,
                error: f64::INFINITY,
            });
        }
        Ok(-t.quantile(q)?)
    }

    /// `B_{n+l}(w, z)` normalized by `K_n`.
    pub fn b(&self, w: f64, z: f64) -> Result<f64> {
        let k = PosteriorKernel::new(&self.setup, &self.loss, self.m)?;
        let norm = self.setup.normalization()?;
        Ok(norm * k.deriv_integral(self.c0 + z, w, &TIGHT)?.value)
    }
}

/// `g_{π_l}(y)` by the default route.
pub fn g_pi(setup: &ProblemSetup, loss: &Loss, l: f64, y: f64) -> Result<f64> {
    ShrinkFunction::new(setup, loss, l)?.eval(y)
}

/// `B_m(w, z)` with the problem's `c0(n)` built in, normalized by `K_n`.
pub fn b_function(setup: &ProblemSetup, loss: &Loss, m: f64, w: f64, z: f64) -> Result<f64> {
    let n = setup.nf();
    if !(m >= 1.0) {
        return Err(Error::invalid(format!("B index must be at least 1, got {m}")));
    }
    check_existence(setup, loss, m)?;
    let c0 = crate::estimators::c0::c0(setup, loss, n)?;
    let k = PosteriorKernel::new(setup, loss, m)?;
    Ok(setup.normalization()? * k.deriv_integral(c0 + z, w, &TIGHT)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelDensity;
    use std::f64::consts::PI;

    fn normal(n: usize) -> ProblemSetup {
        ProblemSetup::new(ModelDensity::Normal, n).unwrap()
    }

    #[test]
    fn squared_error_oracles() {
        // n = 1, l = 0 is the boundary prior and goes through minimization
        let s = ShrinkFunction::new(&normal(1), &Loss::power(2.0).unwrap(), 0.0).unwrap();
        assert!(s.is_boundary());
        assert!((s.eval(0.0).unwrap() - 2.0 / PI).abs() < 1e-12);
        let g1 = 0.25 / (0.25 + 3.0 * PI / 8.0);
        assert!((s.eval(1.0).unwrap() - g1).abs() < 1e-12);
        assert_eq!(s.right_limit(), 0.0);
        let c = ShrinkFunction::with_method(&normal(1), &Loss::power(2.0).unwrap(), 0.0, Method::ClosedForm).unwrap();
        assert!((c.eval(1.0).unwrap() - g1).abs() < 1e-14);
    }

    #[test]
    fn absolute_error_oracle() {
        let s = ShrinkFunction::new(&normal(1), &Loss::power(1.0).unwrap(), 0.0).unwrap();
        assert!((s.eval(0.0).unwrap() - 1.0 / 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn routes_agree_for_squared_error() {
        let loss = Loss::power(2.0).unwrap();
        let setup = normal(1);
        let a = ShrinkFunction::new(&setup, &loss, 0.0).unwrap();
        for method in [Method::FreeRoot, Method::FreeMin, Method::PosteriorRoot] {
            let b = ShrinkFunction::with_method(&setup, &loss, 0.0, method).unwrap();
            for y in [-2.0, 0.0, 1.5] {
                let (ga, gb) = (a.eval(y).unwrap(), b.eval(y).unwrap());
                assert!((ga - gb).abs() < 1e-8, "{method:?} y={y}: {ga} vs {gb}");
            }
        }
    }

    #[test]
    fn defining_equation_holds() {
        let loss = Loss::asym_power(2.0, 1.0, 2.0).unwrap();
        let s = ShrinkFunction::new(&normal(2), &loss, 1.0).unwrap();
        for y in [-1.0, 0.5] {
            let g = s.eval(y).unwrap();
            assert!(s.b(y, g).unwrap().abs() < 1e-8);
            assert!(s.b(y + 0.5, g).unwrap() > 0.0);
        }
    }

    #[test]
    fn prior_bound_enforced() {
        assert!(ShrinkFunction::new(&normal(2), &Loss::power(2.0).unwrap(), -1.5).is_err());
        let b = ShrinkFunction::new(&normal(2), &Loss::power(2.0).unwrap(), -1.0).unwrap();
        assert!(b.is_boundary());
        assert_eq!(b.method(), Method::FreeMin);
    }
}
