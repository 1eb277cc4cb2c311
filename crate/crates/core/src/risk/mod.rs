//! Frequentist risk as a function of `λ = μ/σ`, dominance comparisons and
//! the sign-change diagnostics behind the minimaxity results.

pub mod curve;
pub mod diagnostics;
pub mod dominance;
pub mod mc;

pub use curve::{
    invariance_check, risk_curve_quadrature, risk_quadrature, risk_quadrature_with, risk_unscaled, InvarianceCheck,
    KCache, RiskCurve, RiskMethod,
};
pub use diagnostics::{
    d_rho, d_rho_at, default_lambda_grid, derivative_sign_check, diagnostics_scan, psi, psi_at, psi_spec,
    sign_change_scan, w_tail_monotonicity, w_tail_prob, w_tail_prob_at, DerivativeCheck, DiagnosticsReport,
    FLambdaY, SignPattern, WTailReport, YScan, LAMBDA_MIN,
};
pub use dominance::{dominance_check, dominance_check_mc, DominancePoint, DominanceReport, Verdict};
pub use mc::{mc_estimator, risk_curve_mc, risk_difference_mc, risk_mc, risk_mc_with, McEstimate};
