use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mixcolor_core::emdenoise::{estimate_centers, EmConfig};
use mixcolor_core::{mix, QuantizedAlphabet};

/// Two centers at 1 and 4 with noise 0.2, drawn from a fixed hash so the bench needs
/// no RNG dependency.
fn samples(n: usize) -> Vec<f64> {
    (0..n as u64)
        .map(|i| {
            let h = mix(11, i);
            let center = if h & 1 == 0 { 1.0 } else { 4.0 };
            // sum of uniforms, close enough to Gaussian for timing
            let u: f64 = (0..4).map(|s| (mix(h, s) >> 11) as f64 / (1u64 << 53) as f64).sum();
            center + 0.2 * (u - 2.0) * 3f64.sqrt()
        })
        .collect()
}

fn centers(c: &mut Criterion) {
    let alphabet = QuantizedAlphabet::new(1.0, 5).unwrap();
    let mut group = c.benchmark_group("estimate_centers");
    for &n in &[30, 180, 1200] {
        let ys = samples(n);
        for (name, recenter) in [("recenter", true), ("staged", false)] {
            let cfg = EmConfig { recenter, ..EmConfig::default() };
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| {
                b.iter(|| estimate_centers(black_box(&ys), 0.2, &alphabet, &cfg).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, centers);
criterion_main!(benches);
