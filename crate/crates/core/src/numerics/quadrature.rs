//! Globally adaptive Gauss–Kronrod (10/21-point) quadrature.
//!
//! Infinite ranges are mapped onto bounded ones with `t = u/(1-u²)`, which
//! keeps polynomially decaying (Student-like) tails integrable in `u`.
//! Algebraic endpoint singularities of the form `|t - a|^(q-1)` are removed
//! exactly by the substitution `t = a ± s^(1/q)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the nodes XGK[1], XGK[3], ..., XGK[9].
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Smallest relative tolerance the engine will accept.
pub const MIN_REL_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self::one_dim()
    }
}

impl QuadratureSpec {
    pub const fn one_dim() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_subdivisions: 2000,
        }
    }

    pub const fn two_dim() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-14,
            max_subdivisions: 2000,
        }
    }

    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    /// Spec used for the inner pass of a nested integral: ten times tighter,
    /// but never below what the engine can deliver.
    pub fn inner(&self) -> Self {
        Self {
            rel_tol: (self.rel_tol / 10.0).max(MIN_REL_TOL),
            abs_tol: self.abs_tol / 10.0,
            max_subdivisions: self.max_subdivisions,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) || self.max_subdivisions == 0 {
            return Err(Error::invalid(format!(
                "quadrature tolerances must be positive and max_subdivisions >= 1 (got {self:?})"
            )));
        }
        if self.rel_tol < MIN_REL_TOL {
            return Err(Error::AccuracyNotReached {
                estimate: f64::NAN,
                error: self.rel_tol,
            });
        }
        Ok(())
    }
}

fn needs_map(q: f64) -> bool {
    q > 0.0 && q < 2.0 && q != 1.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    /// Estimate of the integral of `|f|`; used for roundoff floors.
    pub abs_value: f64,
    pub evaluations: usize,
}

impl Integral {
    pub const ZERO: Integral = Integral {
        value: 0.0,
        error: 0.0,
        abs_value: 0.0,
        evaluations: 0,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum End {
    Lower,
    Upper,
}

/// One integration range, optionally with an algebraic singularity
/// `|t - endpoint|^(q-1)` at one finite endpoint. Full accuracy needs the
/// singular endpoint at 0, so that `t` itself carries the distance to it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub lo: f64,
    pub hi: f64,
    singular: Option<(End, f64)>,
}

impl Piece {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            singular: None,
        }
    }

    /// Marks the lower endpoint as singular with exponent `q - 1`. Only
    /// `q` in `(0, 2)`, `q != 1` changes the rule; `|t|^(q-1)` is then
    /// either unbounded or has an unbounded derivative.
    pub fn singular_lower(mut self, q: f64) -> Self {
        if needs_map(q) && self.lo.is_finite() {
            self.singular = Some((End::Lower, q));
        }
        self
    }

    pub fn singular_upper(mut self, q: f64) -> Self {
        if needs_map(q) && self.hi.is_finite() {
            self.singular = Some((End::Upper, q));
        }
        self
    }

    fn map(&self) -> Map {
        let (lo, hi) = (self.lo, self.hi);
        if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
            return Map::Whole;
        }
        let (origin, dir, other, q) = match self.singular {
            Some((End::Upper, q)) => (hi, -1.0, lo, q),
            Some((End::Lower, q)) => (lo, 1.0, hi, q),
            None if lo.is_finite() => (lo, 1.0, hi, 1.0),
            None => (hi, -1.0, lo, 1.0),
        };
        let finite_len = other.is_finite().then(|| (other - origin).abs().powf(q));
        Map::Ray {
            origin,
            dir,
            inv_q: 1.0 / q,
            finite_len,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Map {
    Whole,
    Ray {
        origin: f64,
        dir: f64,
        inv_q: f64,
        finite_len: Option<f64>,
    },
}

#[inline]
fn phi(u: f64) -> (f64, f64) {
    let d = 1.0 - u * u;
    (u / d, (1.0 + u * u) / (d * d))
}

impl Map {
    /// True when a singular map has rounded onto its singular endpoint.
    fn hits_origin(&self, t: f64) -> bool {
        matches!(*self, Map::Ray { origin, inv_q, .. } if inv_q != 1.0 && t == origin)
    }

    fn u_range(&self) -> (f64, f64) {
        match *self {
            Map::Whole => (-1.0, 1.0),
            Map::Ray {
                finite_len: Some(len),
                ..
            } => (0.0, len),
            Map::Ray { .. } => (0.0, 1.0),
        }
    }

    #[inline]
    fn apply(&self, u: f64) -> (f64, f64) {
        match *self {
            Map::Whole => phi(u),
            Map::Ray {
                origin,
                dir,
                inv_q,
                finite_len,
            } => {
                let (s, ds) = if finite_len.is_some() {
                    (u, 1.0)
                } else {
                    phi(u)
                };
                if inv_q == 1.0 {
                    (origin + dir * s, ds)
                } else if s == 0.0 {
                    (origin, 0.0)
                } else if !s.is_finite() {
                    (origin + dir * s, 0.0)
                } else {
                    let sp = s.powf(inv_q - 1.0);
                    (origin + dir * s * sp, ds * inv_q * sp)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Rule {
    value: f64,
    error: f64,
    abs: f64,
    aux: f64,
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut e = err.abs();
    if res_asc != 0.0 && e != 0.0 {
        let scale = (200.0 * e / res_asc).powf(1.5);
        e = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        let min_err = 50.0 * f64::EPSILON * res_abs;
        if min_err > e {
            e = min_err;
        }
    }
    e
}

fn gk21<F>(f: &mut F, map: &Map, a: f64, b: f64) -> Rule
where
    F: FnMut(f64) -> (f64, f64),
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut eval = |u: f64| {
        let (t, jac) = map.apply(u);
        if map.hits_origin(t) {
            return (0.0, 0.0);
        }
        let (v, aux) = f(t);
        if jac == 0.0 || (v == 0.0 && aux == 0.0) {
            (0.0, 0.0)
        } else {
            (v * jac, aux * jac)
        }
    };

    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    let (fc, ac) = eval(center);
    let mut res_g = 0.0;
    let mut res_k = fc * WGK[10];
    let mut res_abs = res_k.abs();
    let mut aux = ac * WGK[10];

    for (j, wg) in WG.iter().enumerate() {
        let jtw = 2 * j + 1;
        let x = half * XGK[jtw];
        let (f1, a1) = eval(center - x);
        let (f2, a2) = eval(center + x);
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        res_g += wg * (f1 + f2);
        res_k += WGK[jtw] * (f1 + f2);
        res_abs += WGK[jtw] * (f1.abs() + f2.abs());
        aux += WGK[jtw] * (a1 + a2);
    }
    for j in 0..5 {
        let jtwm1 = 2 * j;
        let x = half * XGK[jtwm1];
        let (f1, a1) = eval(center - x);
        let (f2, a2) = eval(center + x);
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        res_k += WGK[jtwm1] * (f1 + f2);
        res_abs += WGK[jtwm1] * (f1.abs() + f2.abs());
        aux += WGK[jtwm1] * (a1 + a2);
    }

    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let abs_half = half.abs();
    let err = (res_k - res_g) * half;
    res_abs *= abs_half;
    res_asc *= abs_half;
    Rule {
        value: res_k * half,
        error: rescale_error(err, res_abs, res_asc),
        abs: res_abs,
        aux: aux * half,
    }
}

struct Segment {
    a: f64,
    b: f64,
    piece: usize,
    rule: Rule,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.rule.error == other.rule.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.rule.error.total_cmp(&other.rule.error)
    }
}

/// Core engine: integrates `f` over the pieces, where `f` returns a value and
/// an auxiliary quantity integrated with the same nodes (it never drives
/// refinement). Returns the integral plus the auxiliary integral.
fn adapt<F>(mut f: F, pieces: &[Piece], spec: &QuadratureSpec) -> Result<(Integral, f64)>
where
    F: FnMut(f64) -> (f64, f64),
{
    spec.validate()?;
    let maps: Vec<Map> = pieces
        .iter()
        .filter(|p| p.hi > p.lo)
        .map(Piece::map)
        .collect();
    if maps.is_empty() {
        return Ok((Integral::ZERO, 0.0));
    }

    let mut heap = BinaryHeap::new();
    let mut frozen: Vec<Segment> = Vec::new();
    let mut evaluations = 0usize;
    for (i, m) in maps.iter().enumerate() {
        let (a, b) = m.u_range();
        let rule = gk21(&mut f, m, a, b);
        evaluations += 21;
        heap.push(Segment {
            a,
            b,
            piece: i,
            rule,
        });
    }

    let totals = |heap: &BinaryHeap<Segment>, frozen: &[Segment]| {
        heap.iter()
            .chain(frozen.iter())
            .fold((0.0, 0.0, 0.0, 0.0), |acc, s| {
                (
                    acc.0 + s.rule.value,
                    acc.1 + s.rule.error,
                    acc.2 + s.rule.abs,
                    acc.3 + s.rule.aux,
                )
            })
    };

    let (mut value, mut error, mut abs, _) = totals(&heap, &frozen);
    loop {
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::Divergent(format!(
                "non-finite integrand values (estimate {value})"
            )));
        }
        let target = spec.abs_tol.max(spec.rel_tol * value.abs());
        let floor = 100.0 * f64::EPSILON * abs;
        if error <= target || error <= floor {
            break;
        }
        if heap.len() + frozen.len() >= spec.max_subdivisions {
            return Err(Error::AccuracyNotReached {
                estimate: value,
                error,
            });
        }
        let Some(seg) = heap.pop() else {
            return Err(Error::AccuracyNotReached {
                estimate: value,
                error,
            });
        };
        let mid = 0.5 * (seg.a + seg.b);
        if !(mid > seg.a && mid < seg.b) || (seg.b - seg.a) <= 4.0 * f64::EPSILON * mid.abs() {
            frozen.push(seg);
            continue;
        }
        let m = &maps[seg.piece];
        let left = gk21(&mut f, m, seg.a, mid);
        let right = gk21(&mut f, m, mid, seg.b);
        evaluations += 42;
        value += left.value + right.value - seg.rule.value;
        error += left.error + right.error - seg.rule.error;
        abs += left.abs + right.abs - seg.rule.abs;
        heap.push(Segment {
            a: seg.a,
            b: mid,
            piece: seg.piece,
            rule: left,
        });
        heap.push(Segment {
            a: mid,
            b: seg.b,
            piece: seg.piece,
            rule: right,
        });
    }

    let (value, error, abs, aux) = totals(&heap, &frozen);
    if !value.is_finite() {
        return Err(Error::Divergent("non-finite integral".into()));
    }
    Ok((
        Integral {
            value,
            error,
            abs_value: abs,
            evaluations,
        },
        aux,
    ))
}

/// Integrates `f` over `[a, b]`; either endpoint may be infinite.
pub fn integrate_1d<F>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<Integral>
where
    F: Fn(f64) -> f64,
{
    integrate_split(f, a, b, &[], spec)
}

/// Integrates over `[a, b]` split at the given interior breakpoints.
pub fn integrate_split<F>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    spec: &QuadratureSpec,
) -> Result<Integral>
where
    F: Fn(f64) -> f64,
{
    if a.is_nan() || b.is_nan() {
        return Err(Error::invalid("NaN integration limit"));
    }
    if a == b {
        return Ok(Integral::ZERO);
    }
    if a > b {
        let mut r = integrate_split(f, b, a, breaks, spec)?;
        r.value = -r.value;
        return Ok(r);
    }
    integrate_pieces(f, &split_pieces(a, b, breaks), spec)
}

/// Builds consecutive pieces covering `[a, b]` from interior breakpoints.
pub fn split_pieces(a: f64, b: f64, breaks: &[f64]) -> Vec<Piece> {
    let mut pts: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|x| x.is_finite() && *x > a && *x < b)
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut out = Vec::with_capacity(pts.len() + 1);
    let mut lo = a;
    for p in pts {
        out.push(Piece::new(lo, p));
        lo = p;
    }
    out.push(Piece::new(lo, b));
    out
}

pub fn integrate_pieces<F>(f: F, pieces: &[Piece], spec: &QuadratureSpec) -> Result<Integral>
where
    F: Fn(f64) -> f64,
{
    adapt(|t| (f(t), 0.0), pieces, spec).map(|(i, _)| i)
}

/// Nested integral `∫ outer(t) dt` where each outer value is itself an
/// integral. Inner errors are integrated alongside and added to the
/// reported error; the first inner failure aborts the whole computation.
pub fn integrate_nested<F>(inner: F, pieces: &[Piece], spec: &QuadratureSpec) -> Result<Integral>
where
    F: Fn(f64) -> Result<Integral>,
{
    let mut failure: Option<Error> = None;
    let mut inner_evals = 0usize;
    let res = adapt(
        |t| {
            if failure.is_some() {
                return (0.0, 0.0);
            }
            match inner(t) {
                Ok(i) => {
                    inner_evals += i.evaluations;
                    (i.value, i.error)
                }
                Err(e) => {
                    failure = Some(e);
                    (0.0, 0.0)
                }
            }
        },
        pieces,
        spec,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    let (mut integral, aux) = res?;
    integral.error += aux.abs();
    integral.evaluations += inner_evals;
    Ok(integral)
}

/// `∫_0^∞ ∫_ℝ f(u, v) du dv`, inner over `u`, outer over `v`, with the inner
/// pass run ten times tighter than the outer one.
pub fn integrate_2d_halfplane<F>(f: F, spec: &QuadratureSpec) -> Result<Integral>
where
    F: Fn(f64, f64) -> f64,
{
    let inner_spec = spec.inner();
    integrate_nested(
        |v| integrate_split(|u| f(u, v), f64::NEG_INFINITY, f64::INFINITY, &[0.0], &inner_spec),
        &split_pieces(0.0, f64::INFINITY, &[1.0]),
        spec,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn gaussian_over_real_line() {
        let r = integrate_1d(|u| (-u * u / 2.0).exp(), f64::NEG_INFINITY, f64::INFINITY, &QuadratureSpec::one_dim())
            .unwrap();
        assert!((r.value - (2.0 * PI).sqrt()).abs() < 1e-12, "{r:?}");
    }

    #[test]
    fn gamma_four() {
        let r = integrate_1d(|t| t.powi(3) * (-t).exp(), 0.0, f64::INFINITY, &QuadratureSpec::one_dim()).unwrap();
        assert!((r.value - 6.0).abs() < 1e-12, "{r:?}");
    }

    #[test]
    fn halfplane_gaussian_is_pi() {
        // polar coordinates: ∫_0^π ∫_0^∞ r e^{-r²/2} dr dθ = π
        let r = integrate_2d_halfplane(|u, v| (-(u * u + v * v) / 2.0).exp(), &QuadratureSpec::two_dim()).unwrap();
        assert!((r.value - PI).abs() < 1e-8, "{r:?}");
    }

    #[test]
    fn reversed_limits_negate() {
        let spec = QuadratureSpec::one_dim();
        let a = integrate_1d(|t| t * t, 0.0, 2.0, &spec).unwrap().value;
        let b = integrate_1d(|t| t * t, 2.0, 0.0, &spec).unwrap().value;
        assert!((a - 8.0 / 3.0).abs() < 1e-13);
        assert_eq!(a, -b);
    }

    #[test]
    fn lower_half_line() {
        let r = integrate_1d(|t| t.exp(), f64::NEG_INFINITY, 1.0, &QuadratureSpec::one_dim()).unwrap();
        assert!((r.value - 1f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn endpoint_singularity_removed_exactly() {
        // ∫_0^1 t^{-1/2} dt = 2, and ∫_0^∞ d^{-0.7} e^{-1-d} dd = Γ(0.3) e^{-1}
        let spec = QuadratureSpec::one_dim();
        let r = integrate_pieces(|t| t.powf(-0.5), &[Piece::new(0.0, 1.0).singular_lower(0.5)], &spec).unwrap();
        assert!((r.value - 2.0).abs() < 1e-13, "{r:?}");
        assert!(r.evaluations <= 63);
        let g03 = statrs::function::gamma::gamma(0.3);
        let r = integrate_pieces(
            |d| d.powf(-0.7) * (-1.0 - d).exp(),
            &[Piece::new(0.0, f64::INFINITY).singular_lower(0.3)],
            &spec,
        )
        .unwrap();
        assert!((r.value - g03 * (-1f64).exp()).abs() < 1e-11, "{r:?}");
        let r = integrate_pieces(|t| (-t).powf(-0.5), &[Piece::new(-1.0, 0.0).singular_upper(0.5)], &spec).unwrap();
        assert!((r.value - 2.0).abs() < 1e-13);
    }

    #[test]
    fn heavy_tail_student_like() {
        // ∫ (1+t²)^{-3/2} dt = 2
        let r = integrate_1d(|t| (1.0 + t * t).powf(-1.5), f64::NEG_INFINITY, f64::INFINITY, &QuadratureSpec::one_dim())
            .unwrap();
        assert!((r.value - 2.0).abs() < 1e-12, "{r:?}");
    }

    #[test]
    fn budget_exhaustion_reports_best_estimate() {
        let spec = QuadratureSpec {
            rel_tol: 1e-12,
            abs_tol: 1e-300,
            max_subdivisions: 3,
        };
        match integrate_1d(|t| (50.0 * t).sin().abs(), 0.0, 10.0, &spec) {
            Err(Error::AccuracyNotReached { estimate, error }) => {
                assert!(estimate.is_finite() && error > 0.0);
            }
            other => panic!("expected accuracy failure, got {other:?}"),
        }
    }

    #[test]
    fn too_tight_tolerance_is_an_accuracy_error() {
        let spec = QuadratureSpec::one_dim().with_rel_tol(1e-15);
        assert!(matches!(
            integrate_1d(|t| t, 0.0, 1.0, &spec),
            Err(Error::AccuracyNotReached { .. })
        ));
    }

    #[test]
    fn divergent_integral_is_reported() {
        let r = integrate_1d(|t| 1.0 / t, 1.0, f64::INFINITY, &QuadratureSpec::one_dim());
        assert!(r.is_err());
    }

    #[test]
    fn nested_errors_propagate() {
        let spec = QuadratureSpec::two_dim();
        let r = integrate_nested(
            |v| {
                if v > 0.5 {
                    Err(Error::Divergent("boom".into()))
                } else {
                    Ok(Integral::ZERO)
                }
            },
            &[Piece::new(0.0, 1.0)],
            &spec,
        );
        assert!(matches!(r, Err(Error::Divergent(_))));
    }

    #[test]
    fn halving_tolerance_moves_less_than_reported_error() {
        type Case = (Box<dyn Fn(f64) -> f64>, f64, f64);
        let cases: Vec<Case> = vec![
            (Box::new(|t: f64| (-t * t).exp()), f64::NEG_INFINITY, f64::INFINITY),
            (Box::new(|t: f64| t.sin() / (1.0 + t * t)), 0.0, 10.0),
            (Box::new(|t: f64| (1.0 + t * t).powf(-1.25)), f64::NEG_INFINITY, 3.0),
            (Box::new(|t: f64| t.ln().abs()), 0.0, 2.0),
            (Box::new(|t: f64| (t - 0.3).abs().sqrt()), 0.0, 1.0),
            (Box::new(|t: f64| 1.0 / (1.0 + 25.0 * t * t)), -1.0, 1.0),
            (Box::new(|t: f64| t.powf(2.5) * (-t).exp()), 0.0, f64::INFINITY),
            (Box::new(|t: f64| (t.cos() * 3.0).exp()), 0.0, PI),
            (Box::new(|t: f64| (1.0 + t / 3.0).powf(-3.5)), 0.0, f64::INFINITY),
            (Box::new(|t: f64| t.sqrt() * (-t / 2.0).exp()), 0.0, f64::INFINITY),
        ];
        for (i, (f, a, b)) in cases.iter().enumerate() {
            let coarse = QuadratureSpec::one_dim().with_rel_tol(1e-8);
            let fine = QuadratureSpec::one_dim().with_rel_tol(5e-9);
            let r1 = integrate_1d(f, *a, *b, &coarse).unwrap();
            let r2 = integrate_1d(f, *a, *b, &fine).unwrap();
            assert!((r1.value - r2.value).abs() <= r1.error, "case {i}: {r1:?} vs {r2:?}");
        }
    }
}
