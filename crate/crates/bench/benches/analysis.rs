use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use miw_core::ou_chain::{run_replications, RunSpec, Source};
use miw_core::{
    build_density, distance_report, solve_ground_state, verify_properties, SolverOptions,
};

fn reports(c: &mut Criterion) {
    let cfg = solve_ground_state(1000, &SolverOptions::for_size(1000)).unwrap();
    c.bench_function("verify_properties/1000", |b| {
        b.iter(|| verify_properties(black_box(&cfg), 1e-8))
    });
    c.bench_function("build_density/1000", |b| {
        b.iter(|| build_density(black_box(&cfg)).unwrap())
    });
    c.bench_function("distance_report/1000", |b| {
        b.iter(|| distance_report(black_box(&cfg)).unwrap())
    });
}

fn chain(c: &mut Criterion) {
    let spec = RunSpec {
        m: 200,
        t: 10.0,
        reps: 50,
        seed: 1,
    };
    let mut group = c.benchmark_group("ou_chain");
    group.sample_size(10);
    group.bench_function("normal_m200_t10_reps50", |b| {
        b.iter(|| run_replications(&Source::StandardNormal, black_box(&spec)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, reports, chain);
criterion_main!(benches);
