use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use mixcolor_bench::{noiseless_fixture, robust_fixture};
use mixcolor_core::decode::decode;
use mixcolor_core::robust::robust_decode;

fn noiseless(c: &mut Criterion) {
    let mut group = c.benchmark_group("noiseless_decode");
    for &(n, k) in &[(10_000, 1000), (10_000, 2000), (100_000, 1000), (100_000, 4000)] {
        let (plan, ms) = noiseless_fixture(n, k, 1);
        group.throughput(Throughput::Elements(k as u64));
        group.bench_with_input(BenchmarkId::new(format!("n{n}"), k), &k, |b, _| {
            b.iter(|| decode(black_box(&plan), black_box(&ms), 2).unwrap())
        });
    }
    group.finish();
}

fn robust(c: &mut Criterion) {
    let mut group = c.benchmark_group("robust_decode");
    group.sample_size(10);
    for &n in &[1 << 10, 1 << 12] {
        let (plan, ms) = robust_fixture(n, 50, 1);
        group.bench_with_input(BenchmarkId::new("K50", n), &n, |b, _| {
            b.iter(|| robust_decode(black_box(&plan), black_box(&ms)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, noiseless, robust);
criterion_main!(benches);
