//! Invariant losses `ρ((d - μ)/σ)` and their structural flags.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct CustomLoss {
    pub name: String,
    rho: ScalarFn,
    drho: ScalarFn,
}

#[derive(Clone)]
pub enum LossKind {
    /// `|t|^p`.
    Power { p: f64 },
    /// `c1 |t|^p` for `t < 0`, `c2 |t|^p` for `t ≥ 0`.
    AsymPower { p: f64, c1: f64, c2: f64 },
    Custom(CustomLoss),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LossFlags {
    pub even: bool,
    pub convex: bool,
    /// `|ρ'(-u)| ≤ ρ'(u)` for `u > 0`.
    pub overest: bool,
}

#[derive(Clone)]
pub struct Loss {
    kind: LossKind,
    flags: LossFlags,
}

impl fmt::Debug for Loss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Loss({}, {:?})", self.name(), self.flags)
    }
}

impl PartialEq for Loss {
    fn eq(&self, other: &Self) -> bool {
        match (&self.kind, &other.kind) {
            (LossKind::Custom(a), LossKind::Custom(b)) => Arc::ptr_eq(&a.rho, &b.rho),
            (LossKind::Custom(_), _) | (_, LossKind::Custom(_)) => false,
            _ => self.asym() == other.asym() && self.name() == other.name(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum LossRepr {
    Power { p: f64 },
    AsymPower { p: f64, c1: f64, c2: f64 },
}

impl Serialize for Loss {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        match self.kind {
            LossKind::Power { p } => LossRepr::Power { p }.serialize(ser),
            LossKind::AsymPower { p, c1, c2 } => LossRepr::AsymPower { p, c1, c2 }.serialize(ser),
            LossKind::Custom(ref c) => {
                use serde::ser::SerializeMap;
                let mut m = ser.serialize_map(Some(2))?;
                m.serialize_entry("kind", "custom")?;
                m.serialize_entry("name", &c.name)?;
                m.end()
            }
        }
    }
}

impl<'de> Deserialize<'de> for Loss {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let r = LossRepr::deserialize(de)?;
        let l = match r {
            LossRepr::Power { p } => Loss::power(p),
            LossRepr::AsymPower { p, c1, c2 } => Loss::asym_power(p, c1, c2),
        };
        l.map_err(serde::de::Error::custom)
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("loss parameter {name} must be positive, got {v}")))
    }
}

/// Grid used to validate flags: fixed points plus seeded random ones.
fn validation_grid() -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut g: Vec<f64> = crate::numerics::log_grid(1e-3, 1e3, 61);
    g.extend((0..40).map(|_| 10f64.powf(rng.random_range(-3.0..3.0))));
    g
}

impl Loss {
    pub fn power(p: f64) -> Result<Self> {
        check_positive("p", p)?;
        Self::finish(LossKind::Power { p })
    }

    pub fn asym_power(p: f64, c1: f64, c2: f64) -> Result<Self> {
        check_positive("p", p)?;
        check_positive("c1", c1)?;
        check_positive("c2", c2)?;
        Self::finish(LossKind::AsymPower { p, c1, c2 })
    }

    /// A user-supplied bowl-shaped loss; flags are determined on a grid.
    pub fn custom<R, D>(name: &str, rho: R, drho: D) -> Result<Self>
    where
        R: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let c = CustomLoss {
            name: name.to_string(),
            rho: Arc::new(rho),
            drho: Arc::new(drho),
        };
        if (c.rho)(0.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("custom loss {name}: ρ(0) must be 0")));
        }
        // points where ρ overflows carry no information about the flags
        let grid: Vec<f64> = validation_grid()
            .into_iter()
            .filter(|&u| (c.rho)(u).is_finite() && (c.rho)(-u).is_finite())
            .collect();
        for &u in &grid {
            for t in [u, -u] {
                let (r, d) = ((c.rho)(t), (c.drho)(t));
                if !(r > 0.0) || !(d * t > 0.0) {
                    return Err(Error::invalid(format!(
                        "custom loss {name} is not strictly bowl shaped at t = {t}"
                    )));
                }
            }
        }
        let even = grid.iter().all(|&u| {
            let (a, b) = ((c.rho)(u), (c.rho)(-u));
            (a - b).abs() <= 1e-12 * a.abs().max(1.0)
        });
        let overest = grid.iter().all(|&u| (c.drho)(-u).abs() <= (c.drho)(u) + 1e-12);
        let mut pts: Vec<f64> = grid.iter().flat_map(|&u| [u, -u]).collect();
        pts.push(0.0);
        pts.sort_by(f64::total_cmp);
        let convex = pts.windows(2).all(|w| (c.drho)(w[1]) >= (c.drho)(w[0]) - 1e-12);
        Ok(Self {
            kind: LossKind::Custom(c),
            flags: LossFlags { even, convex, overest },
        })
    }

    fn finish(kind: LossKind) -> Result<Self> {
        let (p, c1, c2) = match kind {
            LossKind::Power { p } => (p, 1.0, 1.0),
            LossKind::AsymPower { p, c1, c2 } => (p, c1, c2),
            LossKind::Custom(_) => unreachable!(),
        };
        let flags = LossFlags {
            even: c1 == c2,
            convex: p >= 1.0,
            overest: c2 >= c1,
        };
        let loss = Self { kind, flags };
        loss.verify_flags()?;
        Ok(loss)
    }

    /// Re-derives the rule-based flags numerically.
    fn verify_flags(&self) -> Result<()> {
        let grid = validation_grid();
        let even = grid.iter().all(|&u| {
            let (a, b) = (self.rho(u), self.rho(-u));
            (a - b).abs() <= 1e-12 * a.max(1.0)
        });
        let overest = check_overest_condition(self, &grid);
        let convex = grid.iter().all(|&u| {
            let h = 1e-3 * u;
            let mid = self.rho(u);
            self.rho(u + h) + self.rho(u - h) - 2.0 * mid >= -1e-12 * mid.max(1.0)
        });
        if even != self.flags.even || overest != self.flags.overest || convex != self.flags.convex {
            return Err(Error::InternalConsistency(format!(
                "loss flags {:?} disagree with grid verification",
                self.flags
            )));
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn kind(&self) -> &LossKind {
        &self.kind
    }

    pub fn flags(&self) -> LossFlags {
        self.flags
    }

    pub fn is_even(&self) -> bool {
        self.flags.even
    }

    pub fn is_convex(&self) -> bool {
        self.flags.convex
    }

    pub fn satisfies_overest(&self) -> bool {
        self.flags.overest
    }

    /// `(p, c1, c2)` for the power family.
    pub fn asym(&self) -> Option<(f64, f64, f64)> {
        match self.kind {
            LossKind::Power { p } => Some((p, 1.0, 1.0)),
            LossKind::AsymPower { p, c1, c2 } => Some((p, c1, c2)),
            LossKind::Custom(_) => None,
        }
    }

    /// Exponent `p` when the loss is homogeneous.
    pub fn exponent(&self) -> Option<f64> {
        self.asym().map(|a| a.0)
    }

    /// True when `ρ'` is unbounded at the origin (power family with `p < 1`).
    pub fn singular_derivative(&self) -> bool {
        matches!(self.exponent(), Some(p) if p < 1.0)
    }

    pub fn name(&self) -> String {
        match &self.kind {
            LossKind::Power { p } => format!("power({p})"),
            LossKind::AsymPower { p, c1, c2 } => format!("asym_power({p},{c1},{c2})"),
            LossKind::Custom(c) => format!("custom({})", c.name),
        }
    }

    #[inline]
    pub fn rho(&self, t: f64) -> f64 {
        match &self.kind {
            LossKind::Power { p } => pow_abs(t, *p),
            LossKind::AsymPower { p, c1, c2 } => {
                if t < 0.0 {
                    c1 * pow_abs(t, *p)
                } else {
                    c2 * pow_abs(t, *p)
                }
            }
            LossKind::Custom(c) => (c.rho)(t),
        }
    }

    /// `ρ'(t)`; zero at the origin for `p ≥ 1`, singular for `p < 1`.
    pub fn rho_prime(&self, t: f64) -> Result<f64> {
        if t == 0.0 && self.singular_derivative() {
            return Err(Error::Singularity(0.0));
        }
        Ok(self.drho(t))
    }

    /// Almost-everywhere derivative used inside quadratures (0 at the origin).
    #[inline]
    pub fn drho(&self, t: f64) -> f64 {
        match &self.kind {
            LossKind::Power { p } => dpow(t, *p, 1.0, 1.0),
            LossKind::AsymPower { p, c1, c2 } => dpow(t, *p, *c1, *c2),
            LossKind::Custom(c) => (c.drho)(t),
        }
    }
}

#[inline]
fn pow_abs(t: f64, p: f64) -> f64 {
    let a = t.abs();
    if p == 2.0 {
        a * a
    } else if p == 1.0 {
        a
    } else {
        a.powf(p)
    }
}

#[inline]
fn dpow(t: f64, p: f64, c1: f64, c2: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let mag = if p == 2.0 {
        2.0 * t.abs()
    } else if p == 1.0 {
        1.0
    } else {
        p * t.abs().powf(p - 1.0)
    };
    if t < 0.0 {
        -c1 * mag
    } else {
        c2 * mag
    }
}

pub fn check_overest_condition(loss: &Loss, grid: &[f64]) -> bool {
    grid.iter()
        .filter(|u| **u > 0.0)
        .all(|&u| loss.drho(-u).abs() <= loss.drho(u) + 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn squared_error() {
        let l = Loss::power(2.0).unwrap();
        assert_eq!(l.rho(-1.5), 2.25);
        assert_eq!(l.rho_prime(-1.5).unwrap(), -3.0);
        let f = l.flags();
        assert!(f.even && f.convex && f.overest);
    }

    #[test]
    fn asymmetric_linear() {
        let l = Loss::asym_power(1.0, 1.0, 3.0).unwrap();
        assert_eq!(l.rho_prime(-1.0).unwrap(), -1.0);
        assert_eq!(l.rho_prime(1.0).unwrap(), 3.0);
        assert_eq!(l.rho(2.0), 6.0);
        assert_eq!(l.rho_prime(2.0).unwrap(), 3.0);
        assert_eq!(l.rho_prime(0.0).unwrap(), 0.0);
        assert!(l.satisfies_overest() && !l.is_even() && l.is_convex());
    }

    #[test]
    fn concave_power() {
        let l = Loss::power(0.5).unwrap();
        assert!(!l.is_convex() && l.is_even());
        assert_eq!(l.rho(4.0), 2.0);
        assert!((l.rho_prime(4.0).unwrap() - 0.25).abs() < 1e-15);
        assert!(matches!(l.rho_prime(0.0), Err(Error::Singularity(_))));
    }

    #[test]
    fn overest_condition() {
        let grid = crate::numerics::log_grid(0.01, 100.0, 50);
        assert!(check_overest_condition(&Loss::asym_power(2.0, 1.0, 2.0).unwrap(), &grid));
        assert!(!check_overest_condition(&Loss::asym_power(1.0, 3.0, 1.0).unwrap(), &grid));
        assert!(check_overest_condition(&Loss::power(3.0).unwrap(), &grid));
    }

    #[test]
    fn invalid_parameters() {
        assert!(Loss::power(0.0).is_err());
        assert!(Loss::asym_power(1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn json_forms() {
        let l = Loss::from_json(r#"{"kind":"asym_power","p":1.0,"c1":1.0,"c2":3.0}"#).unwrap();
        assert_eq!(l, Loss::asym_power(1.0, 1.0, 3.0).unwrap());
        let l = Loss::from_json(r#"{"kind":"power","p":2.0}"#).unwrap();
        assert_eq!(serde_json::to_string(&l).unwrap(), r#"{"kind":"power","p":2.0}"#);
        assert!(Loss::from_json(r#"{"kind":"power","p":2.0,"q":1}"#).is_err());
        assert!(Loss::from_json(r#"{"kind":"power","p":-2.0}"#).is_err());
    }

    #[test]
    fn custom_flags_detected() {
        let linex = Loss::custom("linex", |t: f64| t.exp() - 1.0 - t, |t: f64| t.exp() - 1.0).unwrap();
        let f = linex.flags();
        assert!(f.convex && !f.even && f.overest);
        let cosh = Loss::custom("cosh", |t: f64| t.cosh() - 1.0, |t: f64| t.sinh()).unwrap();
        assert!(cosh.is_even() && cosh.is_convex());
        assert!(Loss::custom("bad", |t: f64| t, |_| 1.0).is_err());
    }
}
