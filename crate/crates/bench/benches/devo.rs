use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use mixcolor_core::devo::{evaluate_params, optimize_params, DesignParams, SearchRanges};

fn evaluate(c: &mut Criterion) {
    let params = DesignParams::balanced(2, 15, 3, 3, 3.71);
    c.bench_function("evaluate_params_l2", |b| {
        b.iter(|| evaluate_params(black_box(&params)))
    });
}

fn optimize(c: &mut Criterion) {
    let mut group = c.benchmark_group("optimize_params");
    group.sample_size(10);
    let w = [0.5, 0.5];
    let narrow = SearchRanges { d: (14, 16), r: (2, 4), v: (2, 4), ..SearchRanges::default() };
    group.bench_function("l2_narrow", |b| {
        b.iter(|| optimize_params(&w, &w, 1e-5, 2.0, black_box(&narrow)))
    });
    group.bench_function("l2_full", |b| {
        b.iter(|| optimize_params(&w, &w, 1e-5, 2.0, black_box(&SearchRanges::default())))
    });
    group.finish();
}

criterion_group!(benches, evaluate, optimize);
criterion_main!(benches);
