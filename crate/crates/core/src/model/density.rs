//! Density generators `f` of the spherically symmetric model.
//!
//! A [`ModelDensity`] is dimension free except for the Student family, whose
//! exponent involves the residual dimension `n`; [`BoundDensity`] closes a
//! generator over `n`. Generators are unnormalized and evaluated in log
//! space.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::quadrature::{integrate_pieces, Piece, QuadratureSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DensityRepr", into = "DensityRepr")]
pub enum ModelDensity {
    /// `f(t) ∝ e^{-t/2}`.
    Normal,
    /// `f(t) ∝ (1 + t/ν)^{-(ν+n+1)/2}`.
    Student { nu: f64 },
    /// `f(t) ∝ e^{-α t^p}`.
    ExpPower { alpha: f64, p: f64 },
    /// `f(t) ∝ t^m e^{-α t}`, `m ∈ (-1/2, 0)`.
    Kotz { m: f64, alpha: f64 },
    /// `f(t) = ∫ v f₀(tv) h(v) dv`.
    ScaleMixture {
        base: Box<ModelDensity>,
        mixing: Box<ModelDensity>,
    },
    /// `f(t) ∝ t^power e^{-rate t^shape}`. Not restricted to the model's
    /// structural assumptions, so it can exercise the violation paths.
    Custom { power: f64, rate: f64, shape: f64 },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case", deny_unknown_fields)]
enum DensityRepr {
    Normal,
    Student(StudentParams),
    ExpPower(ExpPowerParams),
    Kotz(KotzParams),
    ScaleMixture(MixtureParams),
    Custom(CustomParams),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StudentParams {
    nu: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExpPowerParams {
    alpha: f64,
    p: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KotzParams {
    m: f64,
    alpha: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MixtureParams {
    base: Box<ModelDensity>,
    mixing: Box<ModelDensity>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CustomParams {
    power: f64,
    rate: f64,
    shape: f64,
}

impl TryFrom<DensityRepr> for ModelDensity {
    type Error = Error;

    fn try_from(r: DensityRepr) -> Result<Self> {
        let d = match r {
            DensityRepr::Normal => ModelDensity::Normal,
            DensityRepr::Student(p) => ModelDensity::Student { nu: p.nu },
            DensityRepr::ExpPower(p) => ModelDensity::ExpPower {
                alpha: p.alpha,
                p: p.p,
            },
            DensityRepr::Kotz(p) => ModelDensity::Kotz {
                m: p.m,
                alpha: p.alpha,
            },
            DensityRepr::ScaleMixture(p) => ModelDensity::ScaleMixture {
                base: p.base,
                mixing: p.mixing,
            },
            DensityRepr::Custom(p) => ModelDensity::Custom {
                power: p.power,
                rate: p.rate,
                shape: p.shape,
            },
        };
        d.validate()?;
        Ok(d)
    }
}

impl From<ModelDensity> for DensityRepr {
    fn from(d: ModelDensity) -> Self {
        match d {
            ModelDensity::Normal => DensityRepr::Normal,
            ModelDensity::Student { nu } => DensityRepr::Student(StudentParams { nu }),
            ModelDensity::ExpPower { alpha, p } => DensityRepr::ExpPower(ExpPowerParams { alpha, p }),
            ModelDensity::Kotz { m, alpha } => DensityRepr::Kotz(KotzParams { m, alpha }),
            ModelDensity::ScaleMixture { base, mixing } => {
                DensityRepr::ScaleMixture(MixtureParams { base, mixing })
            }
            ModelDensity::Custom { power, rate, shape } => {
                DensityRepr::Custom(CustomParams { power, rate, shape })
            }
        }
    }
}

/// Polynomial tail behaviour `f(t) ~ t^{-β}` as `t → ∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tail {
    /// Faster than any power.
    Light,
    Power(f64),
    Unknown,
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

impl ModelDensity {
    pub fn student(nu: f64) -> Result<Self> {
        let d = ModelDensity::Student { nu };
        d.validate()?;
        Ok(d)
    }

    pub fn exp_power(alpha: f64, p: f64) -> Result<Self> {
        let d = ModelDensity::ExpPower { alpha, p };
        d.validate()?;
        Ok(d)
    }

    pub fn kotz(m: f64, alpha: f64) -> Result<Self> {
        let d = ModelDensity::Kotz { m, alpha };
        d.validate()?;
        Ok(d)
    }

    pub fn scale_mixture(base: ModelDensity, mixing: ModelDensity) -> Result<Self> {
        let d = ModelDensity::ScaleMixture {
            base: Box::new(base),
            mixing: Box::new(mixing),
        };
        d.validate()?;
        Ok(d)
    }

    pub fn custom(power: f64, rate: f64, shape: f64) -> Result<Self> {
        let d = ModelDensity::Custom { power, rate, shape };
        d.validate()?;
        Ok(d)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("density serializes")
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelDensity::Normal => Ok(()),
            ModelDensity::Student { nu } => positive("Student ν", *nu),
            ModelDensity::ExpPower { alpha, p } => {
                positive("exponential power α", *alpha)?;
                positive("exponential power p", *p)
            }
            ModelDensity::Kotz { m, alpha } => {
                positive("Kotz α", *alpha)?;
                if *m > -0.5 && *m < 0.0 {
                    Ok(())
                } else {
                    Err(Error::invalid(format!("Kotz m must lie in (-1/2, 0), got {m}")))
                }
            }
            ModelDensity::ScaleMixture { base, mixing } => {
                base.validate()?;
                mixing.validate()
            }
            ModelDensity::Custom { power, rate, shape } => {
                positive("custom shape", *shape)?;
                if !(power.is_finite() && *power > -1.0) {
                    return Err(Error::invalid(format!("custom power must exceed -1, got {power}")));
                }
                if !(rate.is_finite() && *rate >= 0.0) {
                    return Err(Error::invalid(format!("custom rate must be nonnegative, got {rate}")));
                }
                Ok(())
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            ModelDensity::Normal => "normal".into(),
            ModelDensity::Student { nu } => format!("student({nu})"),
            ModelDensity::ExpPower { alpha, p } => format!("exp_power({alpha},{p})"),
            ModelDensity::Kotz { m, alpha } => format!("kotz({m},{alpha})"),
            ModelDensity::ScaleMixture { base, mixing } => {
                format!("mixture({},{})", base.name(), mixing.name())
            }
            ModelDensity::Custom { power, rate, shape } => format!("custom({power},{rate},{shape})"),
        }
    }

    pub fn bind(&self, n: usize) -> BoundDensity {
        BoundDensity {
            density: self.clone(),
            n: n as f64,
        }
    }

    /// Behaviour of the generator near `t = 0`: `f(t) ~ t^a`.
    fn origin_power(&self) -> f64 {
        match self {
            ModelDensity::Kotz { m, .. } => *m,
            ModelDensity::Custom { power, .. } => *power,
            _ => 0.0,
        }
    }

    pub fn tail(&self, n: usize) -> Tail {
        match self {
            ModelDensity::Normal | ModelDensity::ExpPower { .. } | ModelDensity::Kotz { .. } => {
                Tail::Light
            }
            ModelDensity::Student { nu } => Tail::Power(0.5 * (nu + n as f64 + 1.0)),
            ModelDensity::Custom { power, rate, .. } => {
                if *rate > 0.0 {
                    Tail::Light
                } else {
                    Tail::Power(-power)
                }
            }
            ModelDensity::ScaleMixture { base, mixing } => {
                let a = mixing.origin_power();
                match base.tail(n) {
                    Tail::Light => Tail::Power(a + 2.0),
                    Tail::Power(b) => Tail::Power(b.min(a + 2.0)),
                    Tail::Unknown => Tail::Unknown,
                }
            }
        }
    }
}

/// A generator bound to a residual dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundDensity {
    density: ModelDensity,
    n: f64,
}

const MIXTURE_SPEC: QuadratureSpec = QuadratureSpec {
    rel_tol: 1e-10,
    abs_tol: 1e-300,
    max_subdivisions: 2000,
};

impl BoundDensity {
    pub fn density(&self) -> &ModelDensity {
        &self.density
    }

    /// `ln f(t)` for `t > 0`.
    pub fn ln_f(&self, t: f64) -> f64 {
        match &self.density {
            ModelDensity::Normal => -0.5 * t,
            ModelDensity::Student { nu } => -0.5 * (nu + self.n + 1.0) * (t / nu).ln_1p(),
            ModelDensity::ExpPower { alpha, p } => -alpha * t.powf(*p),
            ModelDensity::Kotz { m, alpha } => m * t.ln() - alpha * t,
            ModelDensity::Custom { power, rate, shape } => {
                let mut v = -rate * t.powf(*shape);
                if *power != 0.0 {
                    v += power * t.ln();
                }
                v
            }
            ModelDensity::ScaleMixture { .. } => self.mixture(t).map_or(f64::NAN, |(f, _)| f.ln()),
        }
    }

    pub fn f(&self, t: f64) -> f64 {
        match &self.density {
            ModelDensity::Normal => (-0.5 * t).exp(),
            ModelDensity::ScaleMixture { .. } => self.mixture(t).map_or(f64::NAN, |(f, _)| f),
            _ => self.ln_f(t).exp(),
        }
    }

    /// `f'(t)/f(t)`.
    pub fn dlog(&self, t: f64) -> f64 {
        match &self.density {
            ModelDensity::Normal => -0.5,
            ModelDensity::Student { nu } => -0.5 * (nu + self.n + 1.0) / (nu + t),
            ModelDensity::ExpPower { alpha, p } => -alpha * p * t.powf(p - 1.0),
            ModelDensity::Kotz { m, alpha } => m / t - alpha,
            ModelDensity::Custom { power, rate, shape } => {
                power / t - rate * shape * t.powf(shape - 1.0)
            }
            ModelDensity::ScaleMixture { .. } => self.mixture(t).map_or(f64::NAN, |(f, d)| d / f),
        }
    }

    /// Mixture value and derivative by quadrature in `w = (1+t) v`.
    fn mixture(&self, t: f64) -> Result<(f64, f64)> {
        let ModelDensity::ScaleMixture { base, mixing } = &self.density else {
            unreachable!("mixture evaluation on a non-mixture density");
        };
        let n = self.n as usize;
        let (b, h) = (base.bind(n), mixing.bind(n));
        let scale = 1.0 / (1.0 + t);
        let pieces = [
            Piece::new(0.0, 1.0),
            Piece::new(1.0, 8.0),
            Piece::new(8.0, f64::INFINITY),
        ];
        let f = integrate_pieces(
            |w| {
                let v = w * scale;
                (v.ln() + b.ln_f(t * v) + h.ln_f(v)).exp()
            },
            &pieces,
            &MIXTURE_SPEC,
        )?;
        let d = integrate_pieces(
            |w| {
                let v = w * scale;
                let core = (2.0 * v.ln() + b.ln_f(t * v) + h.ln_f(v)).exp();
                if core == 0.0 {
                    0.0
                } else {
                    core * b.dlog(t * v)
                }
            },
            &pieces,
            &MIXTURE_SPEC,
        )?;
        Ok((f.value * scale, d.value * scale))
    }

    /// Whether `∫_0^∞ t^k f(t) dt` is finite, from the tail class; `None` if
    /// the tail is not known analytically.
    pub fn moment_exists(&self, k: f64) -> Option<bool> {
        let at_zero = k + self.density.origin_power() > -1.0;
        match self.density.tail(self.n as usize) {
            Tail::Light => Some(at_zero),
            Tail::Power(beta) => Some(at_zero && k - beta < -1.0),
            Tail::Unknown => None,
        }
    }

    /// Finds the mode of `r^n f(r²)` (the radial density), used to place
    /// quadrature breakpoints and size the sampling table.
    pub fn radial_mode(&self) -> f64 {
        // d/dr ln(r^n f(r²)) = 0  ⇔  n/2 + t f'(t)/f(t) = 0 with t = r².
        let g = |lt: f64| {
            let t = lt.exp();
            0.5 * self.n + t * self.dlog(t)
        };
        let (mut lo, mut hi) = (-2.0f64, 2.0f64);
        for _ in 0..40 {
            let (a, b) = (g(lo), g(hi));
            if a.is_nan() || b.is_nan() {
                return 1.0;
            }
            if a > 0.0 && b < 0.0 {
                return crate::numerics::roots::find_root(g, lo, hi, 1e-10)
                    .map(|lt| (0.5 * lt).exp())
                    .unwrap_or(1.0);
            }
            if a <= 0.0 {
                lo -= 2.0;
            }
            if b >= 0.0 {
                hi += 2.0;
            }
        }
        1.0
    }
}

/// Grid findings of the structural check on `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub density: ModelDensity,
    pub n: usize,
    pub grid_points: usize,
    pub tolerance: f64,
    pub passed: bool,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub t: f64,
    pub kind: ViolationKind,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// `f(t)` is zero, negative or not finite.
    NotPositive,
    /// `f'(t) ≥ 0`.
    NotDecreasing,
    /// `t f'(t)/f(t)` went up between consecutive grid points.
    ElasticityIncreasing,
}

pub const ASSUMPTION_TOL: f64 = 1e-10;

/// Log-spaced default grid on `[1e-4, 1e4]` with 1000 points.
pub fn default_assumption_grid() -> Vec<f64> {
    crate::numerics::log_grid(1e-4, 1e4, 1000)
}

pub fn check_assumptions(d: &BoundDensity, grid: &[f64]) -> Result<AssumptionReport> {
    if grid.is_empty() || grid.iter().any(|&t| !(t > 0.0)) || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("assumption grid must be positive and strictly increasing"));
    }
    let mut violations = Vec::new();
    let mut prev: Option<f64> = None;
    for &t in grid {
        let lf = d.ln_f(t);
        if !lf.is_finite() {
            violations.push(Violation {
                t,
                kind: ViolationKind::NotPositive,
                value: lf,
            });
        }
        let dl = d.dlog(t);
        if !(dl < 0.0) {
            violations.push(Violation {
                t,
                kind: ViolationKind::NotDecreasing,
                value: dl,
            });
        }
        let gamma = t * dl;
        if let Some(p) = prev {
            if gamma > p + ASSUMPTION_TOL * p.abs().max(1.0) {
                violations.push(Violation {
                    t,
                    kind: ViolationKind::ElasticityIncreasing,
                    value: gamma - p,
                });
            }
        }
        prev = Some(gamma);
    }
    Ok(AssumptionReport {
        density: d.density.clone(),
        n: d.n as usize,
        grid_points: grid.len(),
        tolerance: ASSUMPTION_TOL,
        passed: violations.is_empty(),
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kotz_log_derivative() {
        let d = ModelDensity::kotz(-0.4, 1.0).unwrap().bind(1);
        assert!((d.dlog(2.0) + 1.2).abs() < 1e-15);
    }

    #[test]
    fn exp_power_half_matches_normal_up_to_constant() {
        let a = ModelDensity::exp_power(0.5, 1.0).unwrap().bind(2);
        let b = ModelDensity::Normal.bind(2);
        for t in [0.1, 1.0, 7.0] {
            assert!((a.ln_f(t) - b.ln_f(t)).abs() < 1e-15);
            assert_eq!(a.dlog(t), -0.5);
        }
    }

    #[test]
    fn parameter_ranges() {
        assert!(ModelDensity::student(0.0).is_err());
        assert!(ModelDensity::kotz(-0.5, 1.0).is_err());
        assert!(ModelDensity::kotz(0.0, 1.0).is_err());
        assert!(ModelDensity::exp_power(1.0, -1.0).is_err());
        assert!(ModelDensity::custom(0.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn json_round_trip_and_rejection() {
        let d = ModelDensity::scale_mixture(ModelDensity::Normal, ModelDensity::kotz(-0.25, 2.0).unwrap())
            .unwrap();
        let s = d.to_json();
        assert_eq!(ModelDensity::from_json(&s).unwrap(), d);
        let s = r#"{"kind":"student","params":{"nu":3.0}}"#;
        assert_eq!(ModelDensity::from_json(s).unwrap(), ModelDensity::Student { nu: 3.0 });
        assert!(ModelDensity::from_json(r#"{"kind":"normal"}"#).is_ok());
        assert!(ModelDensity::from_json(r#"{"kind":"student","params":{"nu":3.0,"x":1}}"#).is_err());
        assert!(ModelDensity::from_json(r#"{"kind":"student","params":{"nu":-3.0}}"#).is_err());
        assert!(ModelDensity::from_json(r#"{"kind":"cauchy","params":{}}"#).is_err());
    }

    #[test]
    fn mixture_with_kotz_mixing_has_closed_form() {
        // ∫ v e^{-tv/2} v^m e^{-αv} dv = Γ(m+2) (t/2 + α)^{-(m+2)}
        let (m, alpha) = (-0.3, 1.5);
        let d = ModelDensity::scale_mixture(ModelDensity::Normal, ModelDensity::kotz(m, alpha).unwrap())
            .unwrap()
            .bind(3);
        let g = statrs::function::gamma::gamma(m + 2.0);
        for t in [1e-3, 0.5, 2.0, 40.0, 900.0] {
            let exact = g * (t / 2.0 + alpha).powf(-(m + 2.0));
            assert!((d.f(t) / exact - 1.0).abs() < 1e-9, "t={t}");
            let dexact = -(m + 2.0) / (t + 2.0 * alpha);
            assert!((d.dlog(t) / dexact - 1.0).abs() < 1e-8, "t={t}");
        }
        assert_eq!(d.density().tail(3), Tail::Power(m + 2.0));
    }

    #[test]
    fn families_pass_assumption_check() {
        let grid = default_assumption_grid();
        for (d, n) in [
            (ModelDensity::Normal, 1),
            (ModelDensity::student(1.0).unwrap(), 3),
            (ModelDensity::student(3.0).unwrap(), 2),
            (ModelDensity::exp_power(1.0, 0.5).unwrap(), 2),
            (ModelDensity::exp_power(0.7, 2.0).unwrap(), 1),
            (ModelDensity::kotz(-0.4, 1.0).unwrap(), 3),
        ] {
            let r = check_assumptions(&d.bind(n), &grid).unwrap();
            assert!(r.passed, "{} {:?}", d.name(), r.violations.first());
        }
    }

    #[test]
    fn increasing_generator_is_flagged() {
        let d = ModelDensity::custom(1.0, 1.0, 1.0).unwrap().bind(1);
        let r = check_assumptions(&d, &default_assumption_grid()).unwrap();
        assert!(!r.passed);
        assert!(r.violations.iter().any(|v| v.kind == ViolationKind::NotDecreasing));
    }

    #[test]
    fn moment_existence_from_tails() {
        let st = ModelDensity::student(3.0).unwrap().bind(2);
        // tail exponent (3+2+1)/2 = 3: ∫ t^k f finite iff k < 2
        assert_eq!(st.moment_exists(1.9), Some(true));
        assert_eq!(st.moment_exists(2.0), Some(false));
        assert_eq!(ModelDensity::Normal.bind(1).moment_exists(50.0), Some(true));
    }

    #[test]
    fn radial_mode_of_normal() {
        // r^n e^{-r²/2} peaks at √n
        for n in [1usize, 3, 6] {
            let r = ModelDensity::Normal.bind(n).radial_mode();
            assert!((r - (n as f64).sqrt()).abs() < 1e-8);
        }
    }
}
