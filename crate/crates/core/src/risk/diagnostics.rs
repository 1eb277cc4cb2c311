//! Sign-change diagnostics: `ψ_ρ(λ, y)`, its rescaled `λ`-derivative
//! `D_ρ(λ, y)`, the density `f_{λ,y}` and the tail probability
//! `P_λ(W > 1/k(y))`.
//!
//! With `c = 1/√(1+y²)` and `k = k(y)`,
//! `ψ(λ, y) = K_n c^{n+1} ∫_λ^∞ I(w) dw`,
//! `I(w) = ∫_0^∞ ρ'(r c k - w) r^n f((r - w y c)² + w² c²) dr`,
//! so that `∂ψ/∂λ = -K_n c^{n+1} I(λ)`, a positive multiple of `D_ρ(λ, y)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::free::pieces_around_zero;
use crate::estimators::posterior::radial_scale;
use crate::estimators::KFunction;
use crate::exec::Execution;
use crate::loss::Loss;
use crate::model::ProblemSetup;
use crate::numerics::log_grid;
use crate::numerics::quadrature::{integrate_nested, integrate_pieces, split_pieces, Integral, Piece, QuadratureSpec};

/// Smallest `λ` used by the diagnostics; `f_{λ,y}` degenerates at `λ = 0`.
pub const LAMBDA_MIN: f64 = 1e-3;

/// Default `λ` grid: 60 log-spaced points on `[1e-3, 30]`.
pub fn default_lambda_grid() -> Vec<f64> {
    log_grid(LAMBDA_MIN, 30.0, 60)
}

/// Quadrature spec for `ψ`, whose value vanishes at `λ = 0` and so needs an
/// absolute floor.
pub fn psi_spec() -> QuadratureSpec {
    QuadratureSpec::two_dim().with_rel_tol(1e-9).with_abs_tol(1e-11)
}

const DENSITY_SPEC: QuadratureSpec = QuadratureSpec {
    rel_tol: 1e-11,
    abs_tol: 1e-300,
    max_subdivisions: 4000,
};

/// Singularity order of `ρ'` at its kink.
fn kink_order(loss: &Loss) -> f64 {
    loss.exponent().map(|p| p.min(1.0)).unwrap_or(1.0)
}

/// Pieces of `[lo, ∞)` in the shifted variable `s = t - t0`, split at the
/// kink `s = 0` with the singular order `q` on both sides.
fn pieces_around_kink(lo: f64, t0: f64, breaks: &[f64], q: f64) -> Vec<Piece> {
    let shifted: Vec<f64> = breaks.iter().map(|b| b - t0).collect();
    let s_lo = lo - t0;
    if s_lo >= 0.0 {
        return split_pieces(s_lo, f64::INFINITY, &shifted);
    }
    let mut ps = pieces_around_zero(s_lo, 0.0, &shifted, q);
    ps.extend(pieces_around_zero(0.0, f64::INFINITY, &shifted, q));
    ps
}

/// Inner integral `I(w)` at fixed `y`, with `k = k(y) > 0` and `c = 1/√(1+y²)`.
#[allow(clippy::too_many_arguments)]
fn inner_i(setup: &ProblemSetup, loss: &Loss, k: f64, c: f64, y: f64, w: f64, scale: f64, spec: &QuadratureSpec) -> Result<Integral> {
    let n = setup.nf();
    let b = setup.bound();
    let centre = (w * y * c).max(0.0);
    let off = (w * c).powi(2);
    let breaks = [scale, centre, centre + scale, centre + 3.0 * scale];
    let r0 = if k > 0.0 { w / (c * k) } else { f64::INFINITY };
    let integrand = |s: f64| {
        let r = s + r0;
        if r <= 0.0 {
            return 0.0;
        }
        let d = r - w * y * c;
        let wt = (n * r.ln() + b.ln_f(d * d + off)).exp();
        if wt == 0.0 {
            0.0
        } else {
            loss.drho(c * k * s) * wt
        }
    };
    if r0.is_finite() && w > 0.0 {
        integrate_pieces(integrand, &pieces_around_kink(0.0, r0, &breaks, kink_order(loss)), spec)
    } else {
        let breaks: Vec<f64> = breaks.to_vec();
        integrate_pieces(
            |r| {
                if r <= 0.0 {
                    return 0.0;
                }
                let d = r - w * y * c;
                let wt = (n * r.ln() + b.ln_f(d * d + off)).exp();
                if wt == 0.0 {
                    0.0
                } else {
                    loss.drho(r * c * k - w) * wt
                }
            },
            &split_pieces(0.0, f64::INFINITY, &breaks),
            spec,
        )
    }
}

/// `ψ(λ, y)` for a given value `k = k(y)`.
pub fn psi_at(setup: &ProblemSetup, loss: &Loss, k: f64, lambda: f64, y: f64, spec: &QuadratureSpec) -> Result<Integral> {
    if !(lambda >= 0.0) || !lambda.is_finite() {
        return Err(Error::invalid(format!("λ must be finite and nonnegative, got {lambda}")));
    }
    if !(k >= 0.0) || !k.is_finite() {
        return Err(Error::invalid(format!("k(y) must be finite and nonnegative, got {k}")));
    }
    let norm = setup.normalization()?;
    let n = setup.nf();
    let c = 1.0 / y.hypot(1.0);
    let scale = radial_scale(setup, n);
    let inner_spec = spec.inner();
    let w_scale = scale / c;
    let outer = split_pieces(lambda, f64::INFINITY, &[w_scale, 3.0 * w_scale, 10.0 * w_scale, lambda + w_scale]);
    let r = integrate_nested(|w| inner_i(setup, loss, k, c, y, w, scale, &inner_spec), &outer, spec)?;
    let f = norm * c.powf(n + 1.0);
    Ok(Integral {
        value: r.value * f,
        error: r.error * f,
        abs_value: r.abs_value * f,
        evaluations: r.evaluations,
    })
}

/// `ψ(λ, y)` for `δ_{π_0}`.
pub fn psi(setup: &ProblemSetup, loss: &Loss, kfn: &KFunction, lambda: f64, y: f64, spec: &QuadratureSpec) -> Result<Integral> {
    psi_at(setup, loss, kfn.k(y)?, lambda, y, spec)
}

/// `∂ψ/∂λ` at `(λ, y)`, exact from the inner integral.
pub fn psi_lambda_derivative_at(setup: &ProblemSetup, loss: &Loss, k: f64, lambda: f64, y: f64, spec: &QuadratureSpec) -> Result<Integral> {
    let norm = setup.normalization()?;
    let n = setup.nf();
    let c = 1.0 / y.hypot(1.0);
    let r = inner_i(setup, loss, k, c, y, lambda, radial_scale(setup, n), spec)?;
    let f = -norm * c.powf(n + 1.0);
    Ok(Integral {
        value: r.value * f,
        error: r.error * f.abs(),
        abs_value: r.abs_value * f.abs(),
        evaluations: r.evaluations,
    })
}

/// The density on `(0, ∞)` proportional to
/// `tⁿ f(λ²(1+y²){(t - a)² + ε})`, `a = y/(1+y²)`, `ε = (1+y²)^{-2}`.
#[derive(Debug, Clone)]
pub struct FLambdaY {
    setup: ProblemSetup,
    lambda: f64,
    y: f64,
    alpha: f64,
    a: f64,
    eps: f64,
    breaks: Vec<f64>,
    ln_z: f64,
}

impl FLambdaY {
    pub fn new(setup: &ProblemSetup, lambda: f64, y: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::invalid(format!(
                "f_(λ,y) is defined for λ > 0 only (got {lambda}); diagnostics start at λ = {LAMBDA_MIN}"
            )));
        }
        if !y.is_finite() {
            return Err(Error::invalid("y must be finite"));
        }
        let q = 1.0 + y * y;
        let alpha = lambda * lambda * q;
        let a = y / q;
        let spread = radial_scale(setup, setup.nf()) / alpha.sqrt();
        let base = a.max(0.0);
        let breaks = vec![base, base + 0.3 * spread, base + spread, base + 3.0 * spread, base + 10.0 * spread];
        let mut d = Self {
            setup: setup.clone(),
            lambda,
            y,
            alpha,
            a,
            eps: 1.0 / (q * q),
            breaks,
            ln_z: 0.0,
        };
        let z = integrate_pieces(|t| d.ln_kernel(t).exp(), &split_pieces(0.0, f64::INFINITY, &d.breaks), &DENSITY_SPEC)
            .map_err(|e| Error::NonNormalizable(format!("f_(λ,y): {e}")))?;
        if !(z.value > 0.0) || !z.value.is_finite() {
            return Err(Error::NonNormalizable(format!("f_(λ,y) has mass {}", z.value)));
        }
        d.ln_z = z.value.ln();
        Ok(d)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn y(&self) -> f64 {
        self.y
    }

    fn ln_kernel(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let u = t - self.a;
        self.setup.nf() * t.ln() + self.setup.ln_f(self.alpha * (u * u + self.eps))
    }

    pub fn pdf(&self, t: f64) -> f64 {
        (self.ln_kernel(t) - self.ln_z).exp()
    }

    /// `∫_0^∞ φ(t - t0) pdf(t) dt` with `φ` possibly singular of order `q` at 0.
    fn expect_around(&self, t0: f64, q: f64, phi: impl Fn(f64) -> f64) -> Result<Integral> {
        integrate_pieces(
            |s| {
                let t = s + t0;
                let p = self.pdf(t);
                if p == 0.0 {
                    0.0
                } else {
                    phi(s) * p
                }
            },
            &pieces_around_kink(0.0, t0, &self.breaks, q),
            &DENSITY_SPEC,
        )
    }

    /// `P(T ≤ t)`.
    pub fn cdf(&self, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Ok(0.0);
        }
        let mut br = self.breaks.clone();
        br.retain(|b| *b < t);
        let r = integrate_pieces(|u| self.pdf(u), &split_pieces(0.0, t, &br), &DENSITY_SPEC)?;
        Ok(r.value.min(1.0))
    }
}

/// `D_ρ(λ, y) = -∫ ρ'(λ(t k - 1)) f_{λ,y}(t) dt` for a given `k = k(y) > 0`.
pub fn d_rho_at(setup: &ProblemSetup, loss: &Loss, k: f64, lambda: f64, y: f64) -> Result<Integral> {
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::invalid(format!("D_ρ needs k(y) > 0, got {k}")));
    }
    let f = FLambdaY::new(setup, lambda, y)?;
    let r = f.expect_around(1.0 / k, kink_order(loss), |s| loss.drho(lambda * k * s))?;
    Ok(Integral {
        value: -r.value,
        ..r
    })
}

pub fn d_rho(setup: &ProblemSetup, loss: &Loss, kfn: &KFunction, lambda: f64, y: f64) -> Result<Integral> {
    d_rho_at(setup, loss, kfn.k(y)?, lambda, y)
}

/// `P_λ(W > 1/k)` where `W` has density `∝ |w k - 1|^{p-1} f_{λ,y}(w)`.
pub fn w_tail_prob_at(setup: &ProblemSetup, loss: &Loss, k: f64, lambda: f64, y: f64) -> Result<f64> {
    let (p, _, _) = loss
        .asym()
        .ok_or_else(|| Error::invalid("W is defined for power-type losses"))?;
    if p < 1.0 {
        return Err(Error::invalid(format!("W tail probability needs p ≥ 1, got {p}")));
    }
    if !(k > 0.0) || !k.is_finite() {
        return Err(Error::invalid(format!("W tail probability needs k(y) > 0, got {k}")));
    }
    let f = FLambdaY::new(setup, lambda, y)?;
    let t0 = 1.0 / k;
    let weight = |s: f64| (k * s).abs().powf(p - 1.0);
    let total = f.expect_around(t0, 1.0, weight)?.value;
    let upper = f.expect_around(t0, 1.0, |s| if s > 0.0 { weight(s) } else { 0.0 })?.value;
    if !(total > 0.0) {
        return Err(Error::NonNormalizable("W density has zero mass".into()));
    }
    Ok((upper / total).clamp(0.0, 1.0))
}

pub fn w_tail_prob(setup: &ProblemSetup, loss: &Loss, kfn: &KFunction, lambda: f64, y: f64) -> Result<f64> {
    w_tail_prob_at(setup, loss, kfn.k(y)?, lambda, y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignPattern {
    AllNeg,
    AllPos,
    NegToPos,
    PosToNeg,
    Multiple,
    /// Every value lies within the tolerance band.
    Indeterminate,
}

impl SignPattern {
    pub fn label(self) -> &'static str {
        match self {
            SignPattern::AllNeg => "all-",
            SignPattern::AllPos => "all+",
            SignPattern::NegToPos => "-to+",
            SignPattern::PosToNeg => "+to-",
            SignPattern::Multiple => "multiple",
            SignPattern::Indeterminate => "indeterminate",
        }
    }
}

/// Classifies `(λ, v)` pairs; values with `|v| ≤ tol` count as zero and do
/// not take part in transitions.
pub fn sign_change_scan(values: &[(f64, f64)], tol: f64) -> SignPattern {
    let signs: Vec<bool> = values
        .iter()
        .filter(|(_, v)| v.abs() > tol)
        .map(|(_, v)| *v > 0.0)
        .collect();
    let Some(&first) = signs.first() else {
        return SignPattern::Indeterminate;
    };
    let changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
    match (changes, first) {
        (0, false) => SignPattern::AllNeg,
        (0, true) => SignPattern::AllPos,
        (1, false) => SignPattern::NegToPos,
        (1, true) => SignPattern::PosToNeg,
        _ => SignPattern::Multiple,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YScan {
    pub y: f64,
    pub k: f64,
    pub lambda: Vec<f64>,
    pub psi: Vec<f64>,
    pub psi_error: Vec<f64>,
    pub d_rho: Vec<f64>,
    pub d_rho_error: Vec<f64>,
    pub pattern: SignPattern,
    /// Largest `ψ - error` over the row; nonpositive when `ψ ≤ error` holds.
    pub max_psi_excess: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub spec: serde_json::Value,
    pub psi_lambda: Vec<f64>,
    pub d_lambda: Vec<f64>,
    pub rows: Vec<YScan>,
    pub passed: bool,
}

impl DiagnosticsReport {
    /// Long-format CSV of `ψ` then `D_ρ` rows.
    pub fn to_csv(&self) -> String {
        let mut rows = Vec::new();
        for r in &self.rows {
            for (i, l) in self.psi_lambda.iter().enumerate() {
                rows.push(vec![0.0, r.y, *l, r.psi[i], r.psi_error[i]]);
            }
            for (i, l) in self.d_lambda.iter().enumerate() {
                rows.push(vec![1.0, r.y, *l, r.d_rho[i], r.d_rho_error[i]]);
            }
        }
        crate::io::csv(&["quantity", "y", "lambda", "value", "error"], &rows)
    }
}

/// `ψ` on `psi_lambdas × ys` and `D_ρ` on `d_lambdas × ys`. A row passes when
/// `ψ ≤ error` throughout and the `D_ρ` pattern is `-to+` or `all-`.
pub fn diagnostics_scan(
    kfn: &KFunction,
    psi_lambdas: &[f64],
    d_lambdas: &[f64],
    ys: &[f64],
    spec: &QuadratureSpec,
    exec: Execution,
) -> Result<DiagnosticsReport> {
    let setup = kfn.shrink().setup();
    let loss = kfn.shrink().loss();
    let ks = exec.try_map(ys, |&y| kfn.k(y))?;
    let psi_cells: Vec<(usize, f64)> = (0..ys.len())
        .flat_map(|i| psi_lambdas.iter().map(move |&l| (i, l)))
        .collect();
    let d_cells: Vec<(usize, f64)> = (0..ys.len())
        .flat_map(|i| d_lambdas.iter().map(move |&l| (i, l)))
        .collect();
    let psis = exec.try_map(&psi_cells, |&(i, l)| psi_at(setup, loss, ks[i], l, ys[i], spec))?;
    let ds = exec.try_map(&d_cells, |&(i, l)| d_rho_at(setup, loss, ks[i], l, ys[i]))?;
    let mut rows = Vec::with_capacity(ys.len());
    let (np, nd) = (psi_lambdas.len(), d_lambdas.len());
    for (i, &y) in ys.iter().enumerate() {
        let pr = &psis[i * np..(i + 1) * np];
        let dr = &ds[i * nd..(i + 1) * nd];
        let tol = dr.iter().map(|d| d.error).fold(0.0, f64::max);
        let pairs: Vec<(f64, f64)> = d_lambdas.iter().zip(dr).map(|(l, d)| (*l, d.value)).collect();
        let pattern = sign_change_scan(&pairs, tol);
        let max_psi_excess = pr.iter().map(|p| p.value - p.error).fold(f64::NEG_INFINITY, f64::max);
        let passed = max_psi_excess <= 0.0 && matches!(pattern, SignPattern::NegToPos | SignPattern::AllNeg);
        rows.push(YScan {
            y,
            k: ks[i],
            lambda: d_lambdas.to_vec(),
            psi: pr.iter().map(|p| p.value).collect(),
            psi_error: pr.iter().map(|p| p.error).collect(),
            d_rho: dr.iter().map(|d| d.value).collect(),
            d_rho_error: dr.iter().map(|d| d.error).collect(),
            pattern,
            max_psi_excess,
            passed,
        });
    }
    let passed = rows.iter().all(|r| r.passed);
    Ok(DiagnosticsReport {
        spec: serde_json::json!({
            "model": setup.density(),
            "n": setup.n(),
            "loss": loss,
            "c0": kfn.c0(),
        }),
        psi_lambda: psi_lambdas.to_vec(),
        d_lambda: d_lambdas.to_vec(),
        rows,
        passed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeCheck {
    pub lambda: f64,
    pub y: f64,
    pub finite_difference: f64,
    pub fd_error: f64,
    pub d_rho: f64,
    /// False only when both signs are resolved and disagree.
    pub agrees: bool,
}

/// Compares the sign of a central difference of `ψ` in `λ` with the sign of
/// `D_ρ` at each cell; cells where either is within its error count as agreeing.
pub fn derivative_sign_check(
    kfn: &KFunction,
    cells: &[(f64, f64)],
    step: f64,
    spec: &QuadratureSpec,
    exec: Execution,
) -> Result<Vec<DerivativeCheck>> {
    let setup = kfn.shrink().setup();
    let loss = kfn.shrink().loss();
    exec.try_map(cells, |&(lambda, y)| -> Result<DerivativeCheck> {
        let k = kfn.k(y)?;
        let h = step * lambda.max(1e-2);
        let lo = (lambda - h).max(0.0);
        let hi = lambda + h;
        let a = psi_at(setup, loss, k, lo, y, spec)?;
        let b = psi_at(setup, loss, k, hi, y, spec)?;
        let fd = (b.value - a.value) / (hi - lo);
        let fd_error = (a.error + b.error) / (hi - lo);
        let d = d_rho_at(setup, loss, k, lambda, y)?;
        let resolved = fd.abs() > fd_error && d.value.abs() > d.error;
        Ok(DerivativeCheck {
            lambda,
            y,
            finite_difference: fd,
            fd_error,
            d_rho: d.value,
            agrees: !resolved || (fd > 0.0) == (d.value > 0.0),
        })
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WTailReport {
    pub y: f64,
    pub lambda: Vec<f64>,
    pub prob: Vec<f64>,
    /// Largest step-to-step increase of the probability.
    pub max_increase: f64,
    pub passed: bool,
}

/// `P_λ(W > 1/k(y))` over `lambdas`, checked nonincreasing up to `tol`.
pub fn w_tail_monotonicity(kfn: &KFunction, lambdas: &[f64], y: f64, tol: f64, exec: Execution) -> Result<WTailReport> {
    let setup = kfn.shrink().setup();
    let loss = kfn.shrink().loss();
    let k = kfn.k(y)?;
    let prob = exec.try_map(lambdas, |&l| w_tail_prob_at(setup, loss, k, l, y))?;
    let max_increase = prob.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    Ok(WTailReport {
        y,
        lambda: lambdas.to_vec(),
        prob,
        max_increase,
        passed: !(max_increase > tol),
    })
}
