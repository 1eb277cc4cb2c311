use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nnloc::estimators::{EstimatorKind, EstimatorSpec, ShrinkFunction, ShrinkTable};
use nnloc::loss::Loss;
use nnloc::model::{ModelDensity, ProblemSetup};
use nnloc::numerics::linear_grid;
use nnloc::numerics::quadrature::QuadratureSpec;
use nnloc::risk::{risk_curve_mc, risk_curve_quadrature};
use nnloc::Execution;

const MODES: [(&str, Execution); 2] = [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)];

fn setup() -> ProblemSetup {
    ProblemSetup::new(ModelDensity::Normal, 3).unwrap()
}

fn shrink_table(c: &mut Criterion) {
    let sh = ShrinkFunction::new(&setup(), &Loss::asym_power(2.0, 1.0, 2.0).unwrap(), 0.0).unwrap();
    let grid = linear_grid(-8.0, 8.0, 201);
    let mut g = c.benchmark_group("shrink_table");
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| ShrinkTable::build(black_box(&sh), &grid, exec).unwrap())
        });
    }
    g.finish();
}

fn risk_curve(c: &mut Criterion) {
    let spec = EstimatorSpec::new(EstimatorKind::GenBayes { l: 0.0 }, setup(), Loss::power(2.0).unwrap()).unwrap();
    let lambdas = linear_grid(0.0, 3.0, 13);
    let q = QuadratureSpec::two_dim();
    let mut g = c.benchmark_group("risk_curve_quadrature");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| risk_curve_quadrature(black_box(&spec), &lambdas, &q, exec).unwrap())
        });
    }
    g.finish();
}

fn risk_mc(c: &mut Criterion) {
    let spec = EstimatorSpec::new(EstimatorKind::TruncatedMre, setup(), Loss::power(0.5).unwrap()).unwrap();
    let lambdas = [0.0, 1.0];
    let mut g = c.benchmark_group("risk_curve_mc");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| risk_curve_mc(black_box(&spec), &lambdas, 200_000, 1, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, shrink_table, risk_curve, risk_mc);
criterion_main!(benches);
