use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use sylvester_core::selection::Matching;
use sylvester_core::{build_sieve, builtin, e_profile, sweep_rho, Side};

fn sieve(c: &mut Criterion) {
    c.bench_function("sieve 1e6", |b| b.iter(|| build_sieve(black_box(1_000_000)).unwrap()));
}

fn profile_and_matching(c: &mut Criterion) {
    let nu8 = builtin("nu8").unwrap();
    c.bench_function("nu8 profile", |b| b.iter(|| e_profile(black_box(&nu8)).unwrap()));
    let profile = e_profile(&nu8).unwrap();
    c.bench_function("nu8 lower matching rho 1.09", |b| {
        b.iter(|| Matching::scan(black_box(&profile), Side::Lower, 1.09, None).unwrap())
    });
}

fn sweep(c: &mut Criterion) {
    let cheb = builtin("cheb").unwrap();
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    group.bench_function("cheb default grid", |b| b.iter(|| sweep_rho(&cheb, 1.02, 2.0, 0.005).unwrap()));
    group.finish();
}

criterion_group!(benches, sieve, profile_and_matching, sweep);
criterion_main!(benches);
