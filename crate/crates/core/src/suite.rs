//! The acceptance battery: eleven numerical criteria, each reporting a
//! verdict, a short detail line and its runtime against a budget.

use std::f64::consts::PI;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, ErrorClass, Result};
use crate::estimators::{
    c0_with, default_y_grid, g_ordering_check, upper_bound_check, C0Method, EstimatorKind, EstimatorSpec, KFunction,
    Method, ShrinkFunction,
};
use crate::exec::Execution;
use crate::loss::Loss;
use crate::model::{ModelDensity, ProblemSetup};
use crate::numerics::quadrature::QuadratureSpec;
use crate::numerics::{linear_grid, log_grid};
use crate::risk::{
    default_lambda_grid, derivative_sign_check, diagnostics_scan, dominance_check, dominance_check_mc, psi_at,
    psi_spec, w_tail_monotonicity, Verdict,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Criterion {
    pub id: u8,
    pub tag: &'static str,
    pub title: &'static str,
    pub budget_s: f64,
}

pub const CRITERIA: [Criterion; 11] = [
    Criterion { id: 1, tag: "closed-form", title: "closed-form shrink values", budget_s: 5.0 },
    Criterion { id: 2, tag: "mre-constant", title: "MRE constants", budget_s: 10.0 },
    Criterion { id: 3, tag: "robustness", title: "shrink function independent of the model density", budget_s: 120.0 },
    Criterion { id: 4, tag: "monotonicity", title: "shrink function monotone in y and in l", budget_s: 60.0 },
    Criterion { id: 5, tag: "boundary", title: "equal risks at lambda = 0", budget_s: 60.0 },
    Criterion { id: 6, tag: "dominance", title: "generalized Bayes dominates MRE (quadrature)", budget_s: 600.0 },
    Criterion { id: 7, tag: "dominance-mc", title: "generalized Bayes dominates MRE (Monte Carlo, p = 1/2)", budget_s: 300.0 },
    Criterion { id: 8, tag: "non-minimax", title: "l = -1 is not minimax", budget_s: 60.0 },
    Criterion { id: 9, tag: "diagnostics", title: "psi, D_rho and W-tail diagnostics", budget_s: 600.0 },
    Criterion { id: 10, tag: "bounds", title: "upper bounds on the estimator and on 1/k", budget_s: 30.0 },
    Criterion { id: 11, tag: "truncated", title: "truncated MRE improves on MRE", budget_s: 60.0 },
];

/// Absolute tolerances of the battery.
pub mod tol {
    pub const CLOSED_FORM: f64 = 1e-8;
    pub const EVEN_C0: f64 = 1e-10;
    pub const ASYM_C0: f64 = 1e-8;
    pub const ROBUSTNESS: f64 = 1e-6;
    pub const MONOTONE: f64 = 1e-8;
    pub const BOUNDARY_RISK: f64 = 2e-8;
    pub const DOMINANCE_ERROR: f64 = 1e-6;
    pub const MC_BAND: f64 = 4.0;
    pub const NON_MINIMAX_FACTOR: f64 = 5.0;
    pub const PSI_AT_ZERO: f64 = 1e-8;
    pub const W_TAIL: f64 = 1e-9;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuiteOptions {
    pub exec: Execution,
    pub seed: u64,
    pub mc_reps: usize,
    /// Overrides the relative tolerance of the two-dimensional quadratures.
    pub rel_tol: Option<f64>,
    /// Counts a criterion over its time budget as failed.
    pub enforce_budget: bool,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            exec: Execution::default(),
            seed: 20_240_601,
            mc_reps: 1_000_000,
            rel_tol: None,
            enforce_budget: false,
        }
    }
}

impl SuiteOptions {
    fn qspec(&self) -> QuadratureSpec {
        let q = QuadratureSpec::two_dim();
        match self.rel_tol {
            Some(r) => q.with_rel_tol(r),
            None => q,
        }
    }

    fn tight_qspec(&self) -> QuadratureSpec {
        let q = QuadratureSpec::two_dim().with_rel_tol(1e-10);
        match self.rel_tol {
            Some(r) => q.with_rel_tol(r),
            None => q,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mc_reps == 0 {
            return Err(Error::invalid("mc_reps must be at least 1"));
        }
        self.qspec().validate()?;
        self.tight_qspec().validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub tag: String,
    pub title: String,
    pub passed: bool,
    pub detail: String,
    /// Class of the error that stopped the criterion, if any.
    pub error_class: Option<ErrorClass>,
    pub runtime_s: f64,
    pub budget_s: f64,
}

impl CriterionResult {
    pub fn within_budget(&self) -> bool {
        self.runtime_s < self.budget_s
    }

    pub fn line(&self) -> String {
        format!(
            "{} criterion {:>2} [{}] {} ({:.1}s / {:.0}s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.tag,
            self.title,
            self.runtime_s,
            self.budget_s,
            self.detail
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub options: SuiteOptions,
    pub results: Vec<CriterionResult>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    /// Exit code: 0 when all pass, else the code of the first error class
    /// met, else 2 for a plain numerical failure.
    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            return 0;
        }
        self.results
            .iter()
            .filter(|r| !r.passed)
            .find_map(|r| r.error_class.map(|c| c.exit_code()))
            .unwrap_or(2)
    }
}

/// Criteria whose tag contains `filter` (all when `None`).
pub fn select(filter: Option<&str>) -> Vec<Criterion> {
    CRITERIA
        .iter()
        .filter(|c| filter.is_none_or(|f| c.tag.contains(f) || c.id.to_string() == f))
        .copied()
        .collect()
}

pub fn run_suite(filter: Option<&str>, opts: &SuiteOptions) -> Result<SuiteReport> {
    opts.validate()?;
    let chosen = select(filter);
    if chosen.is_empty() {
        return Err(Error::invalid(format!("no criterion matches tag {:?}", filter.unwrap_or(""))));
    }
    Ok(SuiteReport {
        options: *opts,
        results: chosen.iter().map(|c| run_criterion(c, opts)).collect(),
    })
}

/// Outcome of a criterion body: verdict and detail line.
type Outcome = Result<(bool, String)>;

pub fn run_criterion(c: &Criterion, opts: &SuiteOptions) -> CriterionResult {
    let start = Instant::now();
    let out = match c.id {
        1 => closed_form(opts),
        2 => mre_constants(opts),
        3 => robustness(opts),
        4 => monotonicity(opts),
        5 => boundary_identity(opts),
        6 => dominance_quadrature(opts),
        7 => dominance_mc(opts),
        8 => non_minimax(opts),
        9 => diagnostics(opts),
        10 => bounds(opts),
        11 => truncated(opts),
        _ => Err(Error::invalid(format!("unknown criterion {}", c.id))),
    };
    let runtime_s = start.elapsed().as_secs_f64();
    let (mut passed, mut detail, error_class) = match out {
        Ok((p, d)) => (p, d, None),
        Err(e) => (false, format!("error: {e}"), Some(e.class())),
    };
    if opts.enforce_budget && runtime_s >= c.budget_s {
        passed = false;
        detail.push_str("; over time budget");
    }
    CriterionResult {
        id: c.id,
        tag: c.tag.into(),
        title: c.title.into(),
        passed,
        detail,
        error_class,
        runtime_s,
        budget_s: c.budget_s,
    }
}

fn setup(d: ModelDensity, n: usize) -> Result<ProblemSetup> {
    ProblemSetup::new(d, n)
}

fn student3() -> Result<ModelDensity> {
    ModelDensity::student(3.0)
}

fn spec(kind: EstimatorKind, d: ModelDensity, n: usize, loss: &Loss) -> Result<EstimatorSpec> {
    EstimatorSpec::new(kind, setup(d, n)?, loss.clone())
}

fn dominance_lambdas() -> Vec<f64> {
    linear_grid(0.0, 3.0, 13)
}

fn closed_form(_: &SuiteOptions) -> Outcome {
    let s1 = setup(ModelDensity::Normal, 1)?;
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (loss, expect) in [(Loss::power(2.0)?, 2.0 / PI), (Loss::power(1.0)?, 1.0 / 3f64.sqrt())] {
        for method in [Method::ClosedForm, Method::FreeRoot, Method::PosteriorMin] {
            let g = ShrinkFunction::with_method(&s1, &loss, 0.0, method)?.eval(0.0)?;
            worst = worst.max((g - expect).abs());
            parts.push(format!("{} {:?} {g:.12}", loss.name(), method));
        }
    }
    Ok((worst <= tol::CLOSED_FORM, format!("max deviation {worst:.2e}; {}", parts.join(", "))))
}

fn mre_constants(_: &SuiteOptions) -> Outcome {
    let mut worst_even = 0.0f64;
    let mut cases = 0;
    let custom = Loss::custom("log_cosh", |t: f64| t.cosh().ln(), |t: f64| t.tanh())?;
    let even = [Loss::power(0.5)?, Loss::power(1.0)?, Loss::power(2.0)?, Loss::power(3.0)?, custom];
    for d in [ModelDensity::Normal, ModelDensity::student(5.0)?] {
        for n in [1usize, 3] {
            let s = setup(d.clone(), n)?;
            for loss in &even {
                let generic = match loss.exponent() {
                    Some(p) if p >= 1.0 => C0Method::FreeRoot,
                    Some(_) => C0Method::FreeMin,
                    None => C0Method::PosteriorRoot,
                };
                for m in [C0Method::Exact, generic] {
                    worst_even = worst_even.max(c0_with(&s, loss, n as f64, m)?.abs());
                    cases += 1;
                }
            }
        }
    }
    let s1 = setup(ModelDensity::Normal, 1)?;
    let asym = Loss::asym_power(1.0, 1.0, 3.0)?;
    let target = -1.0 / 3f64.sqrt();
    let exact = c0_with(&s1, &asym, 1.0, C0Method::Exact)?;
    let root = c0_with(&s1, &asym, 1.0, C0Method::FreeRoot)?;
    let dev = (exact - target).abs().max((root - target).abs());
    Ok((
        worst_even < tol::EVEN_C0 && dev <= tol::ASYM_C0,
        format!("even losses: max |c0| {worst_even:.2e} over {cases} cases; AsymPower(1,1,3): closed form {exact:.12}, root {root:.12}, max deviation {dev:.2e}"),
    ))
}

fn robustness(opts: &SuiteOptions) -> Outcome {
    let ys = linear_grid(-4.0, 4.0, 50);
    let mut worst = 0.0f64;
    let mut notes = Vec::new();
    let mut first_error: Option<Error> = None;
    for loss in [Loss::asym_power(2.0, 1.0, 2.0)?, Loss::power(0.5)?] {
        for l in [0.0, 1.0] {
            // the root of the posterior derivative is unique, so both losses take the root route
            let run = |d: ModelDensity| -> Result<Vec<f64>> {
                let sh = ShrinkFunction::with_method(&setup(d, 2)?, &loss, l, Method::PosteriorRoot)?;
                opts.exec.try_map(&ys, |&y| sh.eval(y))
            };
            if !loss.is_convex() {
                let s = setup(ModelDensity::Normal, 2)?;
                let root = ShrinkFunction::with_method(&s, &loss, l, Method::PosteriorRoot)?;
                let min = ShrinkFunction::with_method(&s, &loss, l, Method::PosteriorMin)?;
                let gap = opts.exec.try_map(&[-2.0, 0.0, 2.0], |&y| Ok::<f64, Error>((root.eval(y)? - min.eval(y)?).abs()))?;
                let gap = gap.into_iter().fold(0.0, f64::max);
                worst = worst.max(gap);
                notes.push(format!("{} l={l}: root vs minimum {gap:.2e}", loss.name()));
            }
            match run(ModelDensity::Normal).and_then(|a| Ok((a, run(student3()?)?))) {
                Ok((a, b)) => {
                    let d = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                    worst = worst.max(d);
                    notes.push(format!("{} l={l}: {d:.2e}", loss.name()));
                }
                Err(e) => {
                    notes.push(format!("{} l={l}: {e}", loss.name()));
                    first_error.get_or_insert(e);
                }
            }
        }
    }
    let detail = format!("max |g_normal - g_student3| {worst:.2e}; {}", notes.join("; "));
    match first_error {
        Some(e) if e.class() != ErrorClass::Existence => Err(e),
        Some(Error::Existence(m)) => Err(Error::Existence(format!("{m} [{detail}]"))),
        Some(e) => Err(e),
        None => Ok((worst <= tol::ROBUSTNESS, detail)),
    }
}

fn monotonicity(opts: &SuiteOptions) -> Outcome {
    let ys = default_y_grid();
    let ls = [-2.0, -1.0, 0.0, 1.0, 2.0];
    let s = setup(ModelDensity::Normal, 3)?;
    let mut worst_y = f64::NEG_INFINITY;
    let mut worst_l = f64::NEG_INFINITY;
    // ordering in l is claimed for even losses only
    let losses = [Loss::power(2.0)?, Loss::power(1.0)?, Loss::power(0.5)?, Loss::asym_power(2.0, 1.0, 2.0)?];
    for loss in &losses {
        let r = g_ordering_check(&s, loss, &ls, &ys, tol::MONOTONE, opts.exec)?;
        if loss.is_even() {
            worst_l = worst_l.max(r.max_violation);
        }
        for row in &r.g {
            worst_y = worst_y.max(row.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max));
        }
    }
    Ok((
        worst_y <= tol::MONOTONE && worst_l <= tol::MONOTONE,
        format!(
            "largest increase in y {worst_y:.2e} (4 losses), in l {worst_l:.2e} (3 even losses); n = 3, l in {ls:?}, 201 y-points"
        ),
    ))
}

fn boundary_identity(opts: &SuiteOptions) -> Outcome {
    let loss = Loss::power(2.0)?;
    let mut worst = 0.0f64;
    let mut notes = Vec::new();
    for n in [1usize, 3] {
        let r = dominance_check(
            &spec(EstimatorKind::GenBayes { l: 0.0 }, ModelDensity::Normal, n, &loss)?,
            &spec(EstimatorKind::Mre, ModelDensity::Normal, n, &loss)?,
            &[0.0],
            &opts.tight_qspec(),
            opts.exec,
        )?;
        let p = r.points[0];
        worst = worst.max(p.difference.abs());
        notes.push(format!("n={n}: diff {:.2e} (err {:.1e})", p.difference, p.error));
    }
    Ok((worst <= tol::BOUNDARY_RISK, notes.join(", ")))
}

fn dominance_quadrature(opts: &SuiteOptions) -> Outcome {
    let lambdas = dominance_lambdas();
    let cases = [
        (ModelDensity::Normal, Loss::power(2.0)?),
        (ModelDensity::Normal, Loss::asym_power(2.0, 1.0, 2.0)?),
        (student3()?, Loss::power(1.0)?),
    ];
    let mut ok = true;
    let mut notes = Vec::new();
    for (d, loss) in cases {
        let r = dominance_check(
            &spec(EstimatorKind::GenBayes { l: 0.0 }, d.clone(), 3, &loss)?,
            &spec(EstimatorKind::Mre, d.clone(), 3, &loss)?,
            &lambdas,
            &opts.qspec(),
            opts.exec,
        )?;
        let max_diff = r.points.iter().map(|p| p.difference).fold(f64::NEG_INFINITY, f64::max);
        let err = r.max_error();
        ok &= r.no_worse() && err <= tol::DOMINANCE_ERROR;
        notes.push(format!("{}/{}: max diff {max_diff:.2e}, max err {err:.1e}", d.name(), loss.name()));
    }
    Ok((ok, notes.join("; ")))
}

fn dominance_mc(opts: &SuiteOptions) -> Outcome {
    let loss = Loss::power(0.5)?;
    let r = dominance_check_mc(
        &spec(EstimatorKind::GenBayes { l: 0.0 }, ModelDensity::Normal, 3, &loss)?,
        &spec(EstimatorKind::Mre, ModelDensity::Normal, 3, &loss)?,
        &dominance_lambdas(),
        opts.mc_reps,
        opts.seed,
        tol::MC_BAND,
        opts.exec,
    )?;
    let worst = r
        .points
        .iter()
        .map(|p| p.difference / (p.error / tol::MC_BAND))
        .fold(f64::NEG_INFINITY, f64::max);
    let dominating = r.points.iter().filter(|p| p.verdict == Verdict::Dominates).count();
    Ok((
        r.no_worse(),
        format!(
            "{} pairs per lambda; largest difference {worst:.2} stderr; {dominating}/{} points resolved as dominating",
            opts.mc_reps,
            r.points.len()
        ),
    ))
}

fn non_minimax(opts: &SuiteOptions) -> Outcome {
    let loss = Loss::power(2.0)?;
    let r = dominance_check(
        &spec(EstimatorKind::GenBayes { l: -1.0 }, ModelDensity::Normal, 3, &loss)?,
        &spec(EstimatorKind::Mre, ModelDensity::Normal, 3, &loss)?,
        &[0.0],
        &opts.qspec(),
        opts.exec,
    )?;
    let p = r.points[0];
    Ok((
        p.difference > tol::NON_MINIMAX_FACTOR * p.error,
        format!("R(0, l=-1) - R(0, MRE) = {:.6e} with err {:.1e}", p.difference, p.error),
    ))
}

fn diagnostics(opts: &SuiteOptions) -> Outcome {
    let ys = linear_grid(-3.0, 3.0, 13);
    let psi_lambdas = log_grid(1e-3, 4.0, 12);
    let d_lambdas = default_lambda_grid();
    let mut spec_q = psi_spec();
    if let Some(r) = opts.rel_tol {
        spec_q = spec_q.with_rel_tol(r);
    }
    let regimes = [
        (ModelDensity::Normal, Loss::power(2.0)?),
        (ModelDensity::Normal, Loss::asym_power(2.0, 1.0, 2.0)?),
        (student3()?, Loss::power(1.0)?),
    ];
    let mut ok = true;
    let mut notes = Vec::new();
    let mut normal_sq: Option<KFunction> = None;
    for (i, (d, loss)) in regimes.into_iter().enumerate() {
        let s = setup(d.clone(), 3)?;
        let kfn = KFunction::new(&s, &loss)?;
        let at_zero = opts.exec.try_map(&ys, |&y| psi_at(&s, &loss, kfn.k(y)?, 0.0, y, &spec_q))?;
        let zero_dev = at_zero.iter().map(|p| p.value.abs()).fold(0.0, f64::max);
        let rep = diagnostics_scan(&kfn, &psi_lambdas, &d_lambdas, &ys, &spec_q, opts.exec)?;
        let excess = rep.rows.iter().map(|r| r.max_psi_excess).fold(f64::NEG_INFINITY, f64::max);
        let bad: Vec<String> = rep
            .rows
            .iter()
            .filter(|r| !r.passed)
            .map(|r| format!("y={}:{}", r.y, r.pattern.label()))
            .collect();
        ok &= zero_dev <= tol::PSI_AT_ZERO && rep.passed;
        notes.push(format!(
            "{}/{}: |psi(0,y)| <= {zero_dev:.1e}, max psi-err {excess:.1e}, failing rows [{}]",
            d.name(),
            loss.name(),
            bad.join(" ")
        ));
        if i == 0 {
            normal_sq = Some(kfn);
        }
    }
    let kfn = normal_sq.ok_or_else(|| Error::InternalConsistency("missing Normal/Power(2) regime".into()))?;
    let cells: Vec<(f64, f64)> = log_grid(0.05, 3.0, 5)
        .into_iter()
        .flat_map(|l| [-2.0, -0.5, 0.5, 2.0].map(|y| (l, y)))
        .collect();
    let checks = derivative_sign_check(&kfn, &cells, 1e-3, &spec_q, opts.exec)?;
    let disagree = checks.iter().filter(|c| !c.agrees).count();
    ok &= disagree == 0;
    notes.push(format!("derivative signs: {disagree}/{} disagree", checks.len()));
    let mut w_worst = f64::NEG_INFINITY;
    for y in [-1.0, 0.0, 1.0] {
        let w = w_tail_monotonicity(&kfn, &d_lambdas, y, tol::W_TAIL, opts.exec)?;
        w_worst = w_worst.max(w.max_increase);
        ok &= w.passed;
    }
    notes.push(format!("W-tail largest increase {w_worst:.1e}"));
    Ok((ok, notes.join("; ")))
}

fn bounds(opts: &SuiteOptions) -> Outcome {
    let grid = log_grid(0.1, 10.0, 20);
    let ys = linear_grid(-5.0, 5.0, 101);
    let mut ok = true;
    let mut notes = Vec::new();
    for n in [1usize, 3] {
        let kfn = KFunction::new(&setup(ModelDensity::Normal, n)?, &Loss::power(2.0)?)?;
        let r = upper_bound_check(&kfn, &grid, &grid, &ys, opts.exec)?;
        ok &= r.passed;
        notes.push(format!(
            "n={n}: min slack {:.2e} (estimate), {:.2e} (1/k); failures {}+{}",
            r.min_estimate_slack,
            r.min_k_slack,
            r.estimate_failures.len(),
            r.k_failures.len()
        ));
    }
    Ok((ok, notes.join("; ")))
}

fn truncated(opts: &SuiteOptions) -> Outcome {
    let loss = Loss::power(2.0)?;
    let r = dominance_check(
        &spec(EstimatorKind::TruncatedMre, ModelDensity::Normal, 3, &loss)?,
        &spec(EstimatorKind::Mre, ModelDensity::Normal, 3, &loss)?,
        &dominance_lambdas(),
        &opts.qspec(),
        opts.exec,
    )?;
    let strict = r.points[0].verdict == Verdict::Dominates;
    Ok((
        r.no_worse() && strict,
        format!(
            "difference at 0 {:.4e} (err {:.1e}); worst {:.2e}",
            r.points[0].difference,
            r.points[0].error,
            r.points.iter().map(|p| p.difference).fold(f64::NEG_INFINITY, f64::max)
        ),
    ))
}
