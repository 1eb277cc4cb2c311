//! Tabulated shrink functions and the function `k(y) = y + c0 + g_{π_0}(y)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::shrink::{Provenance, ShrinkFunction};
use crate::exec::Execution;
use crate::loss::Loss;
use crate::numerics::interp::Pchip;
use crate::numerics::linear_grid;

/// Violations of monotonicity beyond this are treated as errors.
pub const MONOTONE_TOL: f64 = 1e-8;

/// The default `y` grid: 201 points on `[-8, 8]`.
pub fn default_y_grid() -> Vec<f64> {
    linear_grid(-8.0, 8.0, 201)
}

/// A wide grid `y = a sinh(u)` used where estimators are evaluated at
/// arbitrary `x/s`, as in Monte Carlo risk.
pub fn dense_y_grid(points: usize, y_max: f64) -> Vec<f64> {
    let u = y_max.asinh();
    linear_grid(-u, u, points).into_iter().map(f64::sinh).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShrinkTable {
    pub n: usize,
    pub l: f64,
    pub loss: Loss,
    pub c0: f64,
    /// `c0(n + l)`.
    pub c0_posterior: f64,
    pub right_limit: f64,
    /// Slope of the linear continuation to the left of the grid.
    pub left_slope: f64,
    pub provenance: Provenance,
    pub boundary: bool,
    /// Largest increase of `g` between consecutive knots.
    pub max_increase: f64,
    pub y: Vec<f64>,
    pub g: Vec<f64>,
    #[serde(skip)]
    interp: Option<Pchip>,
}

impl ShrinkTable {
    /// Tabulates `g` on `grid`; monotonicity is enforced for convex and
    /// power-type losses and only recorded otherwise.
    pub fn build(shrink: &ShrinkFunction, grid: &[f64], exec: Execution) -> Result<Self> {
        if grid.len() < 2 || grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("y grid must be strictly increasing with at least two points"));
        }
        let g = exec.try_map(grid, |&y| shrink.eval(y))?;
        let c0 = shrink.c0();
        for (y, v) in grid.iter().zip(&g) {
            let bound = -y - c0;
            if *v < bound - 1e-12 * (1.0 + bound.abs()) {
                return Err(Error::InternalConsistency(format!(
                    "g({y}) = {v} is below the nonnegativity bound {bound}"
                )));
            }
        }
        let max_increase = g.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
        let loss = shrink.loss();
        if (loss.is_convex() || loss.asym().is_some()) && max_increase > MONOTONE_TOL {
            return Err(Error::InternalConsistency(format!(
                "shrink function increases by {max_increase:e} between knots for {}",
                loss.name()
            )));
        }
        let left_slope = (g[1] - g[0]) / (grid[1] - grid[0]);
        Self::assemble(
            shrink.setup().n(),
            shrink.l(),
            loss.clone(),
            c0,
            shrink.c0_posterior(),
            shrink.method().provenance(),
            shrink.is_boundary(),
            max_increase,
            left_slope,
            grid.to_vec(),
            g,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        n: usize,
        l: f64,
        loss: Loss,
        c0: f64,
        c0_posterior: f64,
        provenance: Provenance,
        boundary: bool,
        max_increase: f64,
        left_slope: f64,
        y: Vec<f64>,
        g: Vec<f64>,
    ) -> Result<Self> {
        let interp = Pchip::new(y.clone(), g.clone())?;
        Ok(Self {
            n,
            l,
            loss,
            c0,
            c0_posterior,
            right_limit: c0_posterior - c0,
            left_slope,
            provenance,
            boundary,
            max_increase,
            y,
            g,
            interp: Some(interp),
        })
    }

    fn interp(&self) -> &Pchip {
        self.interp.as_ref().expect("table interpolant is built on construction")
    }

    /// Interpolated `g`; the recorded limit beyond the right edge and the
    /// linear continuation, kept above `-y - c0`, beyond the left edge.
    pub fn eval(&self, y: f64) -> f64 {
        let (lo, hi) = self.interp().domain();
        if y > hi {
            self.right_limit
        } else if y < lo {
            let g0 = self.g[0] + self.left_slope * (y - lo);
            g0.max(-y - self.c0)
        } else {
            self.interp().eval(y)
        }
    }

    pub fn is_monotone(&self) -> bool {
        self.max_increase <= MONOTONE_TOL
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("y,g\n");
        for (y, g) in self.y.iter().zip(&self.g) {
            out.push_str(&format!("{},{}\n", crate::io::fmt_f64(*y), crate::io::fmt_f64(*g)));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let t: ShrinkTable = serde_json::from_str(s)?;
        Self::assemble(
            t.n,
            t.l,
            t.loss,
            t.c0,
            t.c0_posterior,
            t.provenance,
            t.boundary,
            t.max_increase,
            t.left_slope,
            t.y,
            t.g,
        )
    }
}

/// `g_{π_l}` tabulated on `y_grid` by the default route.
pub fn g_pi_table(
    setup: &crate::model::ProblemSetup,
    loss: &Loss,
    l: f64,
    y_grid: &[f64],
) -> Result<ShrinkTable> {
    ShrinkTable::build(&ShrinkFunction::new(setup, loss, l)?, y_grid, Execution::default())
}

/// `k(y) = y + c0 + g_{π_0}(y)`, a positive multiple of `δ_{π_0}` at `y = x/s`.
#[derive(Debug, Clone)]
pub struct KFunction {
    shrink: ShrinkFunction,
}

impl KFunction {
    pub fn new(setup: &crate::model::ProblemSetup, loss: &Loss) -> Result<Self> {
        Ok(Self {
            shrink: ShrinkFunction::new(setup, loss, 0.0)?,
        })
    }

    pub fn from_shrink(shrink: ShrinkFunction) -> Result<Self> {
        if shrink.l() != 0.0 {
            return Err(Error::invalid("k(y) is defined from the l = 0 shrink function"));
        }
        Ok(Self { shrink })
    }

    pub fn shrink(&self) -> &ShrinkFunction {
        &self.shrink
    }

    pub fn c0(&self) -> f64 {
        self.shrink.c0()
    }

    pub fn k(&self, y: f64) -> Result<f64> {
        Ok(y + self.shrink.c0() + self.shrink.eval(y)?)
    }

    pub fn table(&self, grid: &[f64], exec: Execution) -> Result<ShrinkTable> {
        ShrinkTable::build(&self.shrink, grid, exec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelDensity, ProblemSetup};

    #[test]
    fn squared_error_table_is_decreasing_with_zero_limit() {
        let s = ProblemSetup::new(ModelDensity::Normal, 1).unwrap();
        let t = g_pi_table(&s, &Loss::power(2.0).unwrap(), 0.0, &default_y_grid()).unwrap();
        assert!(t.is_monotone());
        assert_eq!(t.right_limit, 0.0);
        assert_eq!(t.eval(100.0), 0.0);
        assert!((t.eval(0.0) - 2.0 / std::f64::consts::PI).abs() < 1e-12);
        assert!(t.eval(-20.0) >= 20.0);
    }

    #[test]
    fn asymmetric_linear_limit_is_nonzero() {
        let s = ProblemSetup::new(ModelDensity::Normal, 2).unwrap();
        let loss = Loss::asym_power(1.0, 1.0, 3.0).unwrap();
        let t = g_pi_table(&s, &loss, 1.0, &linear_grid(-4.0, 4.0, 41)).unwrap();
        assert!(t.right_limit.abs() > 1e-3);
        assert!((t.right_limit - (t.c0_posterior - t.c0)).abs() == 0.0);
    }

    #[test]
    fn json_round_trip() {
        let s = ProblemSetup::new(ModelDensity::Normal, 1).unwrap();
        let t = g_pi_table(&s, &Loss::power(1.0).unwrap(), 0.0, &linear_grid(-2.0, 2.0, 9)).unwrap();
        let back = ShrinkTable::from_json(&t.to_json().unwrap()).unwrap();
        assert_eq!(back.g, t.g);
        assert_eq!(back.eval(0.3), t.eval(0.3));
    }

    #[test]
    fn k_is_positive() {
        let s = ProblemSetup::new(ModelDensity::Normal, 3).unwrap();
        let k = KFunction::new(&s, &Loss::power(2.0).unwrap()).unwrap();
        for y in [-5.0, -1.0, 0.0, 3.0] {
            assert!(k.k(y).unwrap() > 0.0);
        }
    }
}
