use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mnr_bench::fiducial;
use mnr_core::likelihood::{loglike_gmm_diag, loglike_mnr_diag, loglike_prof_diag, loglike_unif_diag};
use mnr_core::{real_roots, real_roots_oracle, Component, CubicCoeffs, Linear};

fn kernels(c: &mut Criterion) {
    let model = Linear::new();
    let theta = [5.0, 1.0];
    let mut g = c.benchmark_group("loglike");
    for n in [100, 1000, 10000] {
        let d = fiducial(n, 1);
        g.bench_with_input(BenchmarkId::new("unif", n), &d, |b, d| {
            b.iter(|| loglike_unif_diag(d, &model, black_box(&theta), 2.0).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("prof", n), &d, |b, d| {
            b.iter(|| loglike_prof_diag(d, &model, black_box(&theta), 2.0).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("mnr", n), &d, |b, d| {
            b.iter(|| loglike_mnr_diag(d, &model, black_box(&theta), 2.0, 8.0, 8.0).unwrap())
        });
        let comps = [
            Component {
                weight: 0.5,
                mean: 4.0,
                width: 3.0,
            },
            Component {
                weight: 0.3,
                mean: 9.0,
                width: 4.0,
            },
            Component {
                weight: 0.2,
                mean: 16.0,
                width: 6.0,
            },
        ];
        g.bench_with_input(BenchmarkId::new("gmm3", n), &d, |b, d| {
            b.iter(|| loglike_gmm_diag(d, &model, black_box(&theta), 2.0, &comps).unwrap())
        });
    }
    g.finish();
}

fn cubic(c: &mut Criterion) {
    let one = CubicCoeffs::new(1.0, 0.0, 1.0, -2.0);
    let three = CubicCoeffs::new(1.0, -6.0, 11.0, -6.0);
    let mut g = c.benchmark_group("cubic");
    g.bench_function("closed_form_one_root", |b| {
        b.iter(|| real_roots(black_box(&one)).unwrap())
    });
    g.bench_function("closed_form_three_roots", |b| {
        b.iter(|| real_roots(black_box(&three)).unwrap())
    });
    g.bench_function("bisection_three_roots", |b| {
        b.iter(|| real_roots_oracle(black_box(&three)).unwrap())
    });
    g.finish();
}

criterion_group!(benches, kernels, cubic);
criterion_main!(benches);
