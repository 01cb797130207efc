use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use privlp::gen::{gen_positive_margin, gen_tight_subspace, GenKind, GenSpec};
use privlp::general::{solve_general, GeneralSolveConfig};
use privlp::perceptron::{self, PerceptronConfig, PerceptronConstants};
use privlp::rational::q;
use privlp::sanitizer::Reference;
use privlp::{elimination, oracle, PrivacyBudget, SeededRng};

fn budget() -> PrivacyBudget {
    PrivacyBudget::new(1.0, 1e-6, 0.1).unwrap()
}

fn margin_instance(d: usize, n: usize) -> privlp::HomogeneousLp {
    let spec = GenSpec { d, n, u: 1000, kind: GenKind::PositiveMargin { rho_target: 0.1 } };
    gen_positive_margin(&spec, &mut SeededRng::new(1, d as u64)).unwrap().0
}

fn tight_instance(d: usize, n: usize, k: usize) -> (privlp::LpInstance, elimination::EqualitySystem) {
    let spec = GenSpec { d, n, u: 4, kind: GenKind::TightSubspace { k, multiplicity: 2, planted: None } };
    gen_tight_subspace(&spec, &mut SeededRng::new(2, d as u64)).unwrap()
}

fn perceptron_epoch(c: &mut Criterion) {
    let mut g = c.benchmark_group("perceptron_epoch");
    for d in [2, 4, 8] {
        let h = margin_instance(d, 2000);
        let cfg = PerceptronConfig::default();
        let consts = PerceptronConstants::new(d, 0.1, &budget(), &cfg).unwrap();
        let rng = SeededRng::new(3, 0);
        g.bench_with_input(BenchmarkId::from_parameter(d), &h, |b, h| {
            b.iter(|| perceptron::epoch(black_box(h), &budget(), &consts, &rng, 0).unwrap())
        });
    }
    g.finish();
}

fn perceptron_solve(c: &mut Criterion) {
    let mut g = c.benchmark_group("perceptron_solve");
    g.sample_size(20);
    for d in [2, 4] {
        let h = margin_instance(d, 2000);
        let rng = SeededRng::new(4, 0);
        g.bench_with_input(BenchmarkId::from_parameter(d), &h, |b, h| {
            b.iter(|| perceptron::solve(black_box(h), 0.1, &budget(), &PerceptronConfig::default(), &rng).unwrap())
        });
    }
    g.finish();
}

fn elimination(c: &mut Criterion) {
    let mut g = c.benchmark_group("eliminate");
    for d in [3, 5, 8] {
        let (lp, eq) = tight_instance(d, 60, d / 2 + 1);
        g.bench_with_input(BenchmarkId::from_parameter(d), &(lp, eq), |b, (lp, eq)| {
            b.iter(|| elimination::eliminate(black_box(lp), eq, &q(0)).unwrap())
        });
    }
    g.finish();
}

fn general(c: &mut Criterion) {
    let mut g = c.benchmark_group("solve_general_noiseless");
    g.sample_size(20);
    for d in [2, 3] {
        let (lp, _) = tight_instance(d, 24, 1);
        let cfg = GeneralSolveConfig::noiseless(budget());
        let rng = SeededRng::new(5, 0);
        g.bench_with_input(BenchmarkId::from_parameter(d), &lp, |b, lp| {
            b.iter(|| solve_general(black_box(lp), &cfg, &Reference, &rng).unwrap())
        });
    }
    g.finish();
}

fn exact_oracle(c: &mut Criterion) {
    let mut g = c.benchmark_group("feasible_exact_lp");
    for d in [2, 3] {
        let (lp, _) = tight_instance(d, 30, 1);
        g.bench_with_input(BenchmarkId::from_parameter(d), &lp, |b, lp| {
            b.iter(|| oracle::feasible_exact_lp(black_box(lp), &q(0), None).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, perceptron_epoch, perceptron_solve, elimination, general, exact_oracle);
criterion_main!(benches);
