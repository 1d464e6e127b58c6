use std::hint::black_box;

use bandinv_core::experiments::{generate_instance, tridiagonal, InstanceKind};
use bandinv_core::linalg::{invert, svd};
use bandinv_core::partition::check_banded_corollary;
use bandinv_core::sharp::{search_instance, BlockInstance, DEFAULT_MAX_ITER, DEFAULT_SEARCH_TOL};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn linalg(c: &mut Criterion) {
    let mut g = c.benchmark_group("linalg");
    for m in [20usize, 50, 100] {
        let k = generate_instance(1, m, 2, InstanceKind::BandedRandom).unwrap();
        g.bench_with_input(BenchmarkId::new("svd", m), &k, |b, k| b.iter(|| svd(black_box(k)).unwrap()));
        g.bench_with_input(BenchmarkId::new("invert", m), &k, |b, k| b.iter(|| invert(black_box(k)).unwrap()));
    }
    g.finish();
}

fn corollary(c: &mut Criterion) {
    let k = generate_instance(2, 50, 2, InstanceKind::BandedDominant).unwrap();
    c.bench_function("banded_corollary_50", |b| b.iter(|| check_banded_corollary(black_box(&k), 2, 1e-8).unwrap()));
}

fn worst_case(c: &mut Criterion) {
    let inst = BlockInstance::from_matrix(&tridiagonal(20, 4.0, 1.0), 10, 1).unwrap();
    c.bench_function("worst_case_search_20", |b| {
        b.iter(|| search_instance(black_box(&inst), 1e-3, DEFAULT_MAX_ITER, DEFAULT_SEARCH_TOL, 1).unwrap())
    });
}

criterion_group!(benches, linalg, corollary, worst_case);
criterion_main!(benches);
