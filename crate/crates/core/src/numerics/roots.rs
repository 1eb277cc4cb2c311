//! Bracketed root finding (Brent's method) with automatic bracket expansion.

use crate::error::{Error, Result};

/// Direction in which a bracket is widened when the endpoints do not
/// straddle a sign change.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expand {
    None,
    Both,
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy)]
pub struct RootOptions {
    /// Final bracket width.
    pub tol: f64,
    pub max_iter: usize,
    pub expand: Expand,
    pub max_doublings: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 200,
            expand: Expand::Both,
            max_doublings: 60,
        }
    }
}

impl RootOptions {
    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_expand(mut self, expand: Expand) -> Self {
        self.expand = expand;
        self
    }
}

/// Root of a continuous function on `[lo, hi]`, widening the bracket
/// geometrically if needed. Bracket width on exit is at most `tol`.
pub fn find_root<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    find_root_with(|x| Ok(f(x)), lo, hi, RootOptions::default().with_tol(tol))
}

/// Fallible variant: the first error raised by `f` aborts the search.
pub fn find_root_with<F>(mut f: F, lo: f64, hi: f64, opts: RootOptions) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(Error::invalid(format!("bad root bracket [{lo}, {hi}]")));
    }
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a)?;
    let mut fb = if a == b { fa } else { f(b)? };
    check_finite(a, fa)?;
    check_finite(b, fb)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }

    let mut doublings = 0;
    while fa.signum() == fb.signum() {
        if opts.expand == Expand::None || doublings >= opts.max_doublings {
            return Err(Error::NoRoot(format!(
                "no sign change on [{a}, {b}] (f = {fa:e}, {fb:e})"
            )));
        }
        let w = (b - a).max(1e-3);
        match opts.expand {
            Expand::Both => {
                a -= w / 2.0;
                b += w / 2.0;
                fa = f(a)?;
                fb = f(b)?;
            }
            Expand::Upper => {
                a = b;
                fa = fb;
                b += 2.0 * w;
                fb = f(b)?;
            }
            Expand::Lower => {
                b = a;
                fb = fa;
                a -= 2.0 * w;
                fa = f(a)?;
            }
            Expand::None => unreachable!(),
        }
        check_finite(a, fa)?;
        check_finite(b, fb)?;
        if fa == 0.0 {
            return Ok(a);
        }
        if fb == 0.0 {
            return Ok(b);
        }
        doublings += 1;
    }
    brent(&mut f, a, fa, b, fb, opts)
}

fn check_finite(x: f64, fx: f64) -> Result<()> {
    if fx.is_nan() {
        Err(Error::NoRoot(format!("function is NaN at {x}")))
    } else {
        Ok(())
    }
}

fn brent<F>(f: &mut F, a0: f64, fa0: f64, b0: f64, fb0: f64, opts: RootOptions) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut fa, mut b, mut fb) = (a0, fa0, b0, fb0);
    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;
    for _ in 0..opts.max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * opts.tol;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol1 { d } else { tol1.copysign(xm) };
        fb = f(b)?;
        check_finite(b, fb)?;
    }
    Err(Error::NoRoot(format!(
        "root search did not converge near {b} within {} iterations",
        opts.max_iter
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_and_cubic() {
        assert!((find_root(|x| x - 1.0, 0.0, 2.0, 1e-12).unwrap() - 1.0).abs() < 1e-12);
        let r = find_root(|x| x * x * x - 2.0, 0.0, 2.0, 1e-12).unwrap();
        assert!((r - 2f64.cbrt()).abs() < 1e-12);
    }

    #[test]
    fn bracket_expands_when_needed() {
        let r = find_root(|x| x - 1000.0, 0.0, 1.0, 1e-12).unwrap();
        assert!((r - 1000.0).abs() < 1e-9);
        let r = find_root_with(
            |x| Ok(x + 50.0),
            0.0,
            1.0,
            RootOptions::default().with_expand(Expand::Lower),
        )
        .unwrap();
        assert!((r + 50.0).abs() < 1e-10);
    }

    #[test]
    fn one_sided_expansion_reaches_distant_roots() {
        for (expand, target) in [(Expand::Upper, 1e6), (Expand::Lower, -1e6)] {
            let r = find_root_with(|x| Ok(x - target), 0.0, 1.0, RootOptions::default().with_expand(expand)).unwrap();
            assert!((r - target).abs() < 1e-6, "{expand:?}: {r}");
        }
    }

    #[test]
    fn missing_root_is_an_error() {
        assert!(matches!(find_root(|x| x * x + 1.0, -1.0, 1.0, 1e-12), Err(Error::NoRoot(_))));
    }

    #[test]
    fn closure_errors_propagate() {
        let r = find_root_with(
            |x| if x > 0.5 { Err(Error::Divergent("x".into())) } else { Ok(x - 2.0) },
            0.0,
            1.0,
            RootOptions::default(),
        );
        assert!(matches!(r, Err(Error::Divergent(_))));
    }

    #[test]
    fn step_function_root_keeps_bracket() {
        let r = find_root(|x| if x < 0.3 { -1.0 } else { 1.0 }, 0.0, 1.0, 1e-12).unwrap();
        assert!((r - 0.3).abs() < 1e-11);
    }
}
