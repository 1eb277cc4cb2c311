//! Scalar minimization: a uniform grid scan to locate the global grid
//! minimum, then golden-section refinement inside the neighbouring cells.

use crate::error::Result;

pub const SCAN_POINTS: usize = 257;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Outcome of a scan-and-refine minimization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
    /// Bracket that contained the grid minimum, for derivative polishing.
    pub bracket: (f64, f64),
    /// True when the grid minimum sat on an endpoint of `[lo, hi]`.
    pub at_edge: bool,
}

pub fn minimize_scalar<F>(f: F, lo: f64, hi: f64, tol: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    minimize_with(|x| Ok(f(x)), lo, hi, tol)
        .map(|m| m.x)
        .unwrap_or(f64::NAN)
}

/// Fallible minimization. Flat runs of equal grid values are resolved to the
/// midpoint of the run.
pub fn minimize_with<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<Minimum>
where
    F: FnMut(f64) -> Result<f64>,
{
    let n = SCAN_POINTS;
    let step = (hi - lo) / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
    let mut vals = Vec::with_capacity(n);
    for &x in &xs {
        let v = f(x)?;
        vals.push(if v.is_nan() { f64::INFINITY } else { v });
    }
    let best = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let first = vals.iter().position(|&v| v == best).unwrap_or(0);
    let mut last = first;
    while last + 1 < n && vals[last + 1] == best {
        last += 1;
    }
    if last > first {
        let x = 0.5 * (xs[first] + xs[last]);
        return Ok(Minimum {
            x,
            value: best,
            bracket: (xs[first], xs[last]),
            at_edge: first == 0 || last == n - 1,
        });
    }
    let i = first;
    let a = xs[i.saturating_sub(1)];
    let b = xs[(i + 1).min(n - 1)];
    let (x, value) = golden(&mut f, a, b, xs[i], vals[i], tol)?;
    Ok(Minimum {
        x,
        value,
        bracket: (a, b),
        at_edge: i == 0 || i == n - 1,
    })
}

/// Golden-section search on `[a, b]`, keeping the best point seen (the grid
/// point `x0` included).
fn golden<F>(f: &mut F, mut a: f64, mut b: f64, x0: f64, f0: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut best_x, mut best_f) = (x0, f0);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > tol && (b - a).abs() > 4.0 * f64::EPSILON * (a.abs() + b.abs()) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
        for (x, v) in [(c, fc), (d, fd)] {
            if v < best_f {
                best_x = x;
                best_f = v;
            }
        }
    }
    Ok((best_x, best_f))
}
