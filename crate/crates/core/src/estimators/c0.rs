//! The MRE constant `c0(m) = argmin_c E_{0,1}[ρ(X + c S)]` at index `m`.

use crate::error::{Error, Result};
use crate::estimators::free::FreeObjective;
use crate::estimators::posterior::{PosteriorKernel, COARSE, TIGHT};
use crate::loss::Loss;
use crate::model::ProblemSetup;
use crate::numerics::minimize::{minimize_with, Minimum};
use crate::numerics::roots::{find_root_with, Expand, RootOptions};
use crate::numerics::student_like::StudentLike;

/// How `c0` was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum C0Method {
    /// Even loss or the linear quantile formula.
    Exact,
    /// Root of the density-free stationarity condition.
    FreeRoot,
    /// Scan-and-refine minimization of the density-free objective.
    FreeMin,
    /// Root of the nested two-dimensional condition under the model density.
    PosteriorRoot,
    /// Minimization of the nested two-dimensional risk under the model density.
    PosteriorMin,
}

pub(crate) const ROOT_TOL: f64 = 1e-12;
pub(crate) const MIN_TOL: f64 = 1e-10;

/// Rejects `(f, ρ)` pairs whose risk integral `∫ r^{m+p} f(r²) dr` diverges.
pub fn check_existence(setup: &ProblemSetup, loss: &Loss, m: f64) -> Result<()> {
    let p = loss.exponent().unwrap_or(1.0);
    let k = m + p;
    if let Some(false) = setup.bound().moment_exists(0.5 * (k - 1.0)) {
        return Err(Error::Existence(format!(
            "∫ r^{k} f(r²) dr diverges for {} with n = {}, {}: the posterior loss of index {m} is infinite",
            setup.density().name(),
            setup.n(),
            loss.name()
        )));
    }
    Ok(())
}

/// `c0(m)` by the default route for the loss.
pub fn c0(setup: &ProblemSetup, loss: &Loss, m: f64) -> Result<f64> {
    let method = if loss.is_even() || matches!(loss.exponent(), Some(p) if p == 1.0) {
        C0Method::Exact
    } else if let Some(p) = loss.exponent() {
        if p >= 1.0 {
            C0Method::FreeRoot
        } else {
            C0Method::FreeMin
        }
    } else if loss.is_convex() {
        C0Method::PosteriorRoot
    } else {
        C0Method::PosteriorMin
    };
    c0_with(setup, loss, m, method)
}

pub fn c0_with(setup: &ProblemSetup, loss: &Loss, m: f64, method: C0Method) -> Result<f64> {
    if !(m >= 1.0) {
        return Err(Error::invalid(format!("c0 index must be at least 1, got {m}")));
    }
    check_existence(setup, loss, m)?;
    match method {
        C0Method::Exact => c0_exact(loss, m),
        C0Method::FreeRoot => {
            let j = FreeObjective::new(loss, m)?;
            root_in(|c| j.deriv(c, f64::INFINITY), -1.0, 1.0, Expand::Both)
        }
        C0Method::FreeMin => {
            let j = FreeObjective::new(loss, m)?;
            let scan = j.coarse();
            let min = scan_min(|c| scan.value(c, f64::INFINITY), -10.0, 10.0)?;
            polish(|c| j.deriv(c, f64::INFINITY), &min)
        }
        C0Method::PosteriorRoot => {
            let k = PosteriorKernel::new(setup, loss, m)?;
            root_in(|c| Ok(k.deriv_integral(c, f64::INFINITY, &TIGHT)?.value), -1.0, 1.0, Expand::Both)
        }
        C0Method::PosteriorMin => {
            let k = PosteriorKernel::new(setup, loss, m)?;
            let min = scan_min(|c| Ok(k.loss_integral(c, f64::INFINITY, &COARSE)?.value), -10.0, 10.0)?;
            polish(|c| Ok(k.deriv_integral(c, f64::INFINITY, &TIGHT)?.value), &min)
        }
    }
}

fn c0_exact(loss: &Loss, m: f64) -> Result<f64> {
    if loss.is_even() {
        return Ok(0.0);
    }
    match loss.asym() {
        Some((1.0, c1, c2)) => Ok(-StudentLike::new(m)?.quantile(c2 / (c1 + c2))?),
        _ => Err(Error::invalid(format!("no closed-form c0 for {}", loss.name()))),
    }
}

pub(crate) fn root_in<F>(f: F, lo: f64, hi: f64, expand: Expand) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    find_root_with(
        f,
        lo,
        hi,
        RootOptions {
            tol: ROOT_TOL,
            max_iter: 200,
            expand,
            max_doublings: 60,
        },
    )
}

/// Scan-and-golden minimization on `[lo, hi]`, widening the window while
/// the grid minimum sits on its edge.
pub(crate) fn scan_min<F>(mut f: F, mut lo: f64, mut hi: f64) -> Result<Minimum>
where
    F: FnMut(f64) -> Result<f64>,
{
    for _ in 0..30 {
        let min = minimize_with(&mut f, lo, hi, MIN_TOL)?;
        if !min.at_edge {
            return Ok(min);
        }
        let w = hi - lo;
        if min.x <= lo + 0.5 * w {
            lo -= w;
        } else {
            hi += w;
        }
    }
    Err(Error::NoRoot(format!("minimum escapes every window up to [{lo}, {hi}]")))
}

/// Refines a scan minimum with a root of the derivative inside its bracket,
/// keeping the golden-section point when the derivative does not change sign.
pub(crate) fn polish<F>(mut deriv: F, min: &Minimum) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (a, b) = min.bracket;
    if !(b > a) {
        return Ok(min.x);
    }
    let (da, db) = (deriv(a)?, deriv(b)?);
    if da < 0.0 && db > 0.0 {
        root_in(deriv, a, b, Expand::None)
    } else {
        Ok(min.x)
    }
}
