//! Grid checks of the upper bound on `δ_{π_0}` and of the ordering of
//! `g_{π_l}` in `l`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::estimators::shrink::ShrinkFunction;
use crate::estimators::table::KFunction;
use crate::exec::Execution;
use crate::loss::Loss;
use crate::model::ProblemSetup;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheckReport {
    pub points_checked: usize,
    pub y_points_checked: usize,
    /// `(x, s, δ, x + s²/x)` where the estimate bound fails.
    pub estimate_failures: Vec<[f64; 4]>,
    /// `(y, 1/k(y), max{0, y/(1+y²)})` where the bound on `1/k` fails.
    pub k_failures: Vec<[f64; 3]>,
    /// Smallest slack `x + s²/x - δ` over the grid.
    pub min_estimate_slack: f64,
    /// Smallest slack `1/k(y) - max{0, y/(1+y²)}`.
    pub min_k_slack: f64,
    pub passed: bool,
}

/// Checks `δ_{π_0}(x, s) < x + s²/x` on `x_grid × s_grid` and
/// `1/k(y) > max{0, y/(1+y²)}` on `y_grid`.
pub fn upper_bound_check(
    kfn: &KFunction,
    x_grid: &[f64],
    s_grid: &[f64],
    y_grid: &[f64],
    exec: Execution,
) -> Result<BoundCheckReport> {
    let cells: Vec<(f64, f64)> = x_grid
        .iter()
        .filter(|x| **x > 0.0)
        .flat_map(|&x| s_grid.iter().filter(|s| **s > 0.0).map(move |&s| (x, s)))
        .collect();
    let deltas = exec.try_map(&cells, |&(x, s)| Ok::<_, crate::Error>(s * kfn.k(x / s)?))?;
    let mut estimate_failures = Vec::new();
    let mut min_estimate_slack = f64::INFINITY;
    for (&(x, s), d) in cells.iter().zip(&deltas) {
        let bound = x + s * s / x;
        min_estimate_slack = min_estimate_slack.min(bound - d);
        if !(*d < bound) {
            estimate_failures.push([x, s, *d, bound]);
        }
    }
    let ks = exec.try_map(y_grid, |&y| kfn.k(y))?;
    let mut k_failures = Vec::new();
    let mut min_k_slack = f64::INFINITY;
    for (&y, &k) in y_grid.iter().zip(&ks) {
        let lower = (y / (1.0 + y * y)).max(0.0);
        let inv = if k > 0.0 { 1.0 / k } else { f64::NEG_INFINITY };
        min_k_slack = min_k_slack.min(inv - lower);
        if !(k > 0.0 && inv > lower) {
            k_failures.push([y, inv, lower]);
        }
    }
    Ok(BoundCheckReport {
        points_checked: cells.len(),
        y_points_checked: y_grid.len(),
        passed: estimate_failures.is_empty() && k_failures.is_empty(),
        estimate_failures,
        k_failures,
        min_estimate_slack,
        min_k_slack,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderingReport {
    pub l_values: Vec<f64>,
    pub y_grid: Vec<f64>,
    /// `g` values, one row per `l`.
    pub g: Vec<Vec<f64>>,
    /// `(y, l1, l2, g_{l2} - g_{l1})` where `g` increases with `l`.
    pub violations: Vec<[f64; 4]>,
    pub max_violation: f64,
    pub passed: bool,
}

/// Checks that `g_{π_l}(y)` is nonincreasing in `l` at every `y`, allowing
/// increases up to `tol`.
pub fn g_ordering_check(
    setup: &ProblemSetup,
    loss: &Loss,
    l_list: &[f64],
    y_grid: &[f64],
    tol: f64,
    exec: Execution,
) -> Result<OrderingReport> {
    let mut ls = l_list.to_vec();
    ls.sort_by(f64::total_cmp);
    ls.dedup();
    let shrinks = ls
        .iter()
        .map(|&l| ShrinkFunction::new(setup, loss, l))
        .collect::<Result<Vec<_>>>()?;
    let mut g = Vec::with_capacity(ls.len());
    for s in &shrinks {
        g.push(exec.try_map(y_grid, |&y| s.eval(y))?);
    }
    let mut violations = Vec::new();
    let mut max_violation = 0.0f64;
    for i in 1..ls.len() {
        for (j, &y) in y_grid.iter().enumerate() {
            let inc = g[i][j] - g[i - 1][j];
            max_violation = max_violation.max(inc);
            if inc > tol {
                violations.push([y, ls[i - 1], ls[i], inc]);
            }
        }
    }
    Ok(OrderingReport {
        l_values: ls,
        y_grid: y_grid.to_vec(),
        g,
        passed: violations.is_empty(),
        violations,
        max_violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelDensity;

    #[test]
    fn squared_error_bounds_hold() {
        let s = ProblemSetup::new(ModelDensity::Normal, 1).unwrap();
        let k = KFunction::new(&s, &Loss::power(2.0).unwrap()).unwrap();
        let r = upper_bound_check(&k, &[0.5, 1.0, 3.0], &[0.2, 1.0, 4.0], &[-3.0, 0.0, 1.0, 4.0], Execution::Sequential)
            .unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.points_checked, 9);
    }

    #[test]
    fn ordering_in_l_for_squared_error() {
        let s = ProblemSetup::new(ModelDensity::Normal, 1).unwrap();
        let r = g_ordering_check(&s, &Loss::power(2.0).unwrap(), &[2.0, 0.0, 1.0], &[0.0], 1e-8, Execution::Sequential)
            .unwrap();
        assert!(r.passed);
        assert!(r.g[0][0] > r.g[1][0] && r.g[1][0] > r.g[2][0]);
    }

    #[test]
    fn single_l_passes_trivially() {
        let s = ProblemSetup::new(ModelDensity::Normal, 2).unwrap();
        let r = g_ordering_check(&s, &Loss::power(1.0).unwrap(), &[0.0], &[0.0, 1.0], 1e-8, Execution::Sequential)
            .unwrap();
        assert!(r.passed && r.violations.is_empty());
    }
}
