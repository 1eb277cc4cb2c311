//! Subcommand bodies. Each returns a [`Report`] that the caller renders as
//! CSV or JSON together with the resolved configuration.

use std::path::Path;

use nnloc::estimators::{EstimatorKind, KFunction, ShrinkFunction, ShrinkTable};
use nnloc::io::fmt_f64;
use nnloc::model::{canonicalize, check_assumptions, default_assumption_grid, derive_seed};
use nnloc::risk::{
    derivative_sign_check, diagnostics_scan, dominance_check, dominance_check_mc, psi_spec, risk_curve_mc,
    risk_curve_quadrature, RiskCurve,
};
use nnloc::suite::{run_suite, SuiteOptions};
use nnloc::{Error, Execution, Result};
use serde_json::json;

use crate::config::{invalid, RunConfig};

/// Rendered result of a subcommand.
pub struct Report {
    pub command: &'static str,
    /// `key: value` lines written as `#` comments above the CSV body.
    pub meta: Vec<(String, String)>,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub json: serde_json::Value,
    pub exit_code: i32,
}

impl Report {
    fn new(command: &'static str, header: Vec<&'static str>) -> Self {
        Self {
            command,
            meta: Vec::new(),
            header,
            rows: Vec::new(),
            json: serde_json::Value::Null,
            exit_code: 0,
        }
    }

    fn meta(&mut self, key: impl Into<String>, value: impl ToString) {
        self.meta.push((key.into(), value.to_string()));
    }

    pub fn to_csv(&self, config: &serde_json::Value) -> String {
        let mut out = format!("# nnloc {}\n# config: {config}\n", self.command);
        for (k, v) in &self.meta {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        out.push_str(&self.header.join(","));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self, config: &serde_json::Value) -> String {
        let v = json!({ "command": self.command, "config": config, "result": self.json });
        let mut s = serde_json::to_string_pretty(&v).expect("report serializes");
        s.push('\n');
        s
    }
}

fn num(v: f64) -> String {
    fmt_f64(v)
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

/// Prefixes the message of `e` with `ctx`, keeping its class.
fn context(e: Error, ctx: &str) -> Error {
    match e {
        Error::InvalidParameter(m) => Error::InvalidParameter(format!("{ctx}: {m}")),
        Error::Existence(m) => Error::Existence(format!("{ctx}: {m}")),
        Error::NoRoot(m) => Error::NoRoot(format!("{ctx}: {m}")),
        Error::Divergent(m) => Error::Divergent(format!("{ctx}: {m}")),
        Error::NonNormalizable(m) => Error::NonNormalizable(format!("{ctx}: {m}")),
        Error::InternalConsistency(m) => Error::InternalConsistency(format!("{ctx}: {m}")),
        other => other,
    }
}

pub fn density_check(cfg: &RunConfig) -> Result<Report> {
    let grid = default_assumption_grid();
    let r = check_assumptions(&cfg.model.bind(cfg.n), &grid)?;
    let mut rep = Report::new("density-check", vec!["t", "kind", "value"]);
    rep.meta("passed", r.passed);
    rep.meta("grid_points", r.grid_points);
    rep.meta("violations", r.violations.len());
    for v in &r.violations {
        let kind = serde_json::to_value(v.kind)?;
        rep.rows.push(vec![num(v.t), kind.as_str().unwrap_or_default().to_string(), num(v.value)]);
    }
    rep.exit_code = if r.passed { 0 } else { 2 };
    rep.json = serde_json::to_value(&r)?;
    Ok(rep)
}

fn gen_bayes_indices(cfg: &RunConfig) -> Vec<f64> {
    cfg.estimators
        .iter()
        .filter_map(|k| match k {
            EstimatorKind::GenBayes { l } => Some(*l),
            _ => None,
        })
        .collect()
}

pub fn g_table(cfg: &RunConfig, exec: Execution) -> Result<Report> {
    let ls = gen_bayes_indices(cfg);
    if ls.is_empty() {
        return Err(invalid("g-table needs at least one gen_bayes estimator"));
    }
    let setup = cfg.setup()?;
    let ys = cfg.y_grid.points("y_grid")?;
    let mut rep = Report::new("g-table", vec!["l", "y", "g"]);
    let mut tables = Vec::new();
    for l in ls {
        let ctx = format!("l = {l}");
        let sh = ShrinkFunction::new(&setup, &cfg.loss, l).map_err(|e| context(e, &ctx))?;
        let t = ShrinkTable::build(&sh, &ys, exec).map_err(|e| context(e, &ctx))?;
        let provenance = serde_json::to_value(t.provenance)?;
        rep.meta(
            format!("table l={l}"),
            format!(
                "c0={} c0_posterior={} right_limit={} provenance={} boundary={} monotone={}",
                num(t.c0),
                num(t.c0_posterior),
                num(t.right_limit),
                provenance.as_str().unwrap_or_default(),
                t.boundary,
                t.is_monotone()
            ),
        );
        for (y, g) in t.y.iter().zip(&t.g) {
            rep.rows.push(vec![num(l), num(*y), num(*g)]);
        }
        tables.push(t);
    }
    rep.json = serde_json::to_value(&tables)?;
    Ok(rep)
}

pub fn risk_curve(cfg: &RunConfig, exec: Execution) -> Result<Report> {
    let lambdas = cfg.lambda_grid.points("lambda_grid")?;
    let mc = cfg.use_mc();
    let mut rep = Report::new("risk-curve", vec!["estimator", "lambda", "risk", "error"]);
    rep.meta("method", if mc { "monte_carlo" } else { "quadrature" });
    let mut curves: Vec<RiskCurve> = Vec::new();
    for (i, spec) in cfg.specs()?.iter().enumerate() {
        let ctx = spec.kind.label();
        let c = if mc {
            risk_curve_mc(spec, &lambdas, cfg.tolerances.mc_reps, derive_seed(cfg.seed, i as u64), exec)
        } else {
            risk_curve_quadrature(spec, &lambdas, &cfg.qspec(), exec)
        }
        .map_err(|e| context(e, &ctx))?;
        for j in 0..c.lambda.len() {
            rep.rows.push(vec![ctx.clone(), num(c.lambda[j]), num(c.risk[j]), num(c.error[j])]);
        }
        curves.push(c);
    }
    rep.json = serde_json::to_value(&curves)?;
    Ok(rep)
}

pub fn dominance(cfg: &RunConfig, exec: Execution) -> Result<Report> {
    let specs = cfg.specs()?;
    if specs.len() != 2 {
        return Err(invalid("dominance compares exactly two estimators (the first against the second)"));
    }
    let lambdas = cfg.lambda_grid.points("lambda_grid")?;
    let (a, b) = (&specs[0], &specs[1]);
    let r = if cfg.use_mc() {
        let t = &cfg.tolerances;
        dominance_check_mc(a, b, &lambdas, t.mc_reps, cfg.seed, t.mc_band, exec)?
    } else {
        dominance_check(a, b, &lambdas, &cfg.qspec(), exec)?
    };
    let mut rep = Report::new("dominance", vec!["lambda", "risk_a", "risk_b", "difference", "error", "verdict"]);
    rep.meta("a", a.kind.label());
    rep.meta("b", b.kind.label());
    rep.meta("method", serde_json::to_value(r.method)?.as_str().unwrap_or_default());
    rep.meta("no_worse", r.no_worse());
    for p in &r.points {
        let verdict = serde_json::to_value(p.verdict)?;
        rep.rows.push(vec![
            num(p.lambda),
            num(p.risk_a),
            num(p.risk_b),
            num(p.difference),
            num(p.error),
            verdict.as_str().unwrap_or_default().to_string(),
        ]);
    }
    rep.json = serde_json::to_value(&r)?;
    Ok(rep)
}

/// Cells of the `λ × y` grid, evenly strided, where the sign of `D_ρ` is
/// compared with a finite difference of `ψ`.
const DERIVATIVE_CELLS: usize = 20;

pub fn diagnostics(cfg: &RunConfig, exec: Execution) -> Result<Report> {
    let setup = cfg.setup()?;
    let kfn = KFunction::new(&setup, &cfg.loss)?;
    let psi_lambdas = cfg.lambda_grid.points("lambda_grid")?;
    let d_lambdas: Vec<f64> = psi_lambdas.iter().copied().filter(|l| *l > 0.0).collect();
    if d_lambdas.is_empty() {
        return Err(invalid("diagnostics need at least one positive lambda"));
    }
    let ys = cfg.y_grid.points("y_grid")?;
    let spec = match cfg.tolerances.rel {
        Some(r) => psi_spec().with_rel_tol(r),
        None => psi_spec(),
    };
    let r = diagnostics_scan(&kfn, &psi_lambdas, &d_lambdas, &ys, &spec, exec)?;
    let mut rep = Report::new("diagnostics", vec!["quantity", "y", "lambda", "value", "error"]);
    rep.meta("passed", r.passed);
    let failing: Vec<String> = r.rows.iter().filter(|s| !s.passed).map(|s| num(s.y)).collect();
    rep.meta("failing_y", format!("[{}]", failing.join(" ")));
    let patterns: Vec<String> = r.rows.iter().map(|s| format!("{}:{}", num(s.y), s.pattern.label())).collect();
    rep.meta("d_rho_patterns", patterns.join(" "));
    for s in &r.rows {
        for (i, l) in r.psi_lambda.iter().enumerate() {
            rep.rows.push(vec!["psi".into(), num(s.y), num(*l), num(s.psi[i]), num(s.psi_error[i])]);
        }
        for (i, l) in r.d_lambda.iter().enumerate() {
            rep.rows.push(vec!["d_rho".into(), num(s.y), num(*l), num(s.d_rho[i]), num(s.d_rho_error[i])]);
        }
    }
    let all: Vec<(f64, f64)> = ys.iter().flat_map(|&y| d_lambdas.iter().map(move |&l| (l, y))).collect();
    let stride = all.len().div_ceil(DERIVATIVE_CELLS).max(1);
    let cells: Vec<(f64, f64)> = all.into_iter().step_by(stride).collect();
    let step = 1e-3;
    let checks = derivative_sign_check(&kfn, &cells, step, &spec, exec)?;
    let disagree = checks.iter().filter(|c| !c.agrees).count();
    rep.meta("derivative_sign_disagreements", format!("{disagree}/{}", checks.len()));
    rep.json = json!({ "scan": r, "derivative_checks": checks });
    Ok(rep)
}

/// Numbers separated by commas, whitespace or newlines; `#` lines and a
/// non-numeric first line are skipped.
pub fn read_sample(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| invalid(format!("cannot read sample {}: {e}", path.display())))?;
    let mut out = Vec::new();
    let mut first = true;
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let tokens: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()).collect();
        let parsed: std::result::Result<Vec<f64>, _> = tokens.iter().map(|t| t.parse::<f64>()).collect();
        match parsed {
            Ok(v) => out.extend(v),
            Err(_) if first => {}
            Err(_) => return Err(invalid(format!("sample {}: cannot parse line {line:?}", path.display()))),
        }
        first = false;
    }
    Ok(out)
}

pub fn estimate(cfg: &mut RunConfig, exec: Execution) -> Result<Report> {
    let sample = cfg.sample.clone().ok_or_else(|| invalid("estimate needs a sample (--sample or config \"sample\")"))?;
    let c = canonicalize(&sample)?;
    cfg.n = c.n;
    cfg.validate()?;
    let specs = cfg.specs()?;
    let mut rep = Report::new("estimate", vec!["estimator", "x", "s", "mu_hat", "theta_hat"]);
    rep.meta("sample_size", c.size);
    let values = exec.try_map(&specs, |spec| -> Result<f64> {
        let ctx = spec.kind.label();
        spec.build().and_then(|e| e.evaluate(c.x, c.s)).map_err(|e| context(e, &ctx))
    })?;
    let mut out = Vec::new();
    for (spec, mu) in specs.iter().zip(values) {
        let theta = c.theta(mu);
        rep.rows.push(vec![spec.kind.label(), num(c.x), num(c.s), num(mu), num(theta)]);
        out.push(json!({ "estimator": spec.kind, "mu_hat": mu, "theta_hat": theta }));
    }
    rep.json = json!({ "canonical": c, "estimates": out });
    Ok(rep)
}

pub fn suite(cfg: &RunConfig, exec: Execution, tag: Option<&str>) -> Result<Report> {
    let opts = SuiteOptions {
        exec,
        seed: cfg.seed,
        rel_tol: cfg.tolerances.rel,
        ..SuiteOptions::default()
    };
    let r = run_suite(tag, &opts)?;
    let mut rep = Report::new("suite", vec!["id", "tag", "passed", "error_class", "runtime_s", "budget_s", "detail"]);
    rep.meta("passed", r.passed());
    for c in &r.results {
        eprintln!("{}", c.line());
        let class = c.error_class.and_then(|e| serde_json::to_value(e).ok());
        rep.rows.push(vec![
            c.id.to_string(),
            c.tag.clone(),
            c.passed.to_string(),
            class.as_ref().and_then(|v| v.as_str()).unwrap_or("").to_string(),
            format!("{:.3}", c.runtime_s),
            format!("{:.0}", c.budget_s),
            quote(&c.detail),
        ]);
    }
    rep.exit_code = r.exit_code();
    rep.json = serde_json::to_value(&r)?;
    Ok(rep)
}
