use std::f64::consts::PI;

use nnloc::estimators::{c0, g_pi, EstimatorKind, EstimatorSpec};
use nnloc::loss::Loss;
use nnloc::model::{ModelDensity, ProblemSetup};
use nnloc::numerics::quadrature::QuadratureSpec;
use nnloc::risk::{risk_mc, risk_quadrature};

fn setup(d: ModelDensity, n: usize) -> ProblemSetup {
    ProblemSetup::new(d, n).unwrap()
}

#[test]
fn mre_constants() {
    let s = setup(ModelDensity::Normal, 1);
    let c = c0(&s, &Loss::asym_power(1.0, 1.0, 3.0).unwrap(), 1.0).unwrap();
    assert!((c + 1.0 / 3f64.sqrt()).abs() < 1e-8, "{c}");
    for p in [0.5, 1.0, 2.0, 3.0] {
        assert!(c0(&s, &Loss::power(p).unwrap(), 1.0).unwrap().abs() < 1e-10);
    }
}

#[test]
fn shrink_values_at_zero() {
    let s = setup(ModelDensity::Normal, 1);
    let g2 = g_pi(&s, &Loss::power(2.0).unwrap(), 0.0, 0.0).unwrap();
    let g1 = g_pi(&s, &Loss::power(1.0).unwrap(), 0.0, 0.0).unwrap();
    assert!((g2 - 2.0 / PI).abs() < 1e-8, "{g2}");
    assert!((g1 - 1.0 / 3f64.sqrt()).abs() < 1e-8, "{g1}");
}

#[test]
fn shrink_does_not_depend_on_the_density() {
    let loss = Loss::power(2.0).unwrap();
    for y in [-2.0, 0.3, 1.7] {
        let a = g_pi(&setup(ModelDensity::Normal, 3), &loss, 0.0, y).unwrap();
        let b = g_pi(&setup(ModelDensity::student(5.0).unwrap(), 3), &loss, 0.0, y).unwrap();
        assert!((a - b).abs() < 1e-8, "y = {y}: {a} vs {b}");
    }
}

#[test]
fn mre_risk_is_constant_and_matches_monte_carlo() {
    let spec = EstimatorSpec::new(EstimatorKind::Mre, setup(ModelDensity::Normal, 3), Loss::power(2.0).unwrap()).unwrap();
    let q = QuadratureSpec::two_dim();
    for lambda in [0.0, 0.7, 2.5] {
        let (r, e) = risk_quadrature(&spec, lambda, &q).unwrap();
        assert!((r - 1.0).abs() < 1e-8 && e < 1e-7, "{lambda}: {r} ± {e}");
        let (m, se) = risk_mc(&spec, lambda, 100_000, 3).unwrap();
        assert!((m - r).abs() < 4.0 * se, "{lambda}: {m} ± {se} vs {r}");
    }
}

#[test]
fn truncation_helps_most_at_the_boundary() {
    let s = setup(ModelDensity::Normal, 3);
    let loss = Loss::power(2.0).unwrap();
    let q = QuadratureSpec::two_dim();
    let risk = |k| risk_quadrature(&EstimatorSpec::new(k, s.clone(), loss.clone()).unwrap(), 0.0, &q).unwrap();
    let (t, et) = risk(EstimatorKind::TruncatedMre);
    let (m, em) = risk(EstimatorKind::Mre);
    assert!(t < m - et - em);
    // at mu = 0 the truncated estimator is (X)_+ and its risk is half that of X
    assert!((t - 0.5).abs() < 1e-8, "{t}");
}
