//! Benchmarks for the three hot paths: exact profile construction, the
//! constrained outer minimization, and grid denoising.

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use freedisc::energy::{minimize, EnergyParams, MinimizeOptions};
use freedisc::profile::{hermite_profile, m_k, m_k_constrained, BoundarySpec};
use freedisc::GridSignal;

fn bench_hermite_profile(c: &mut Criterion) {
    let mut group = c.benchmark_group("hermite_profile");
    for k in [2usize, 4, 8] {
        let spec = BoundarySpec::jump_only(k, 1.0).unwrap();
        group.bench_function(format!("k{k}"), |bench| {
            bench.iter(|| hermite_profile(black_box(k), black_box(&spec), black_box(2.0)).unwrap())
        });
    }
    group.finish();
}

fn bench_m_k(c: &mut Criterion) {
    let mut group = c.benchmark_group("m_k");
    for k in [2usize, 3, 5] {
        group.bench_function(format!("exact_k{k}"), |bench| {
            bench.iter(|| m_k(black_box(k)).unwrap())
        });
    }
    // 2n >= k keeps the constrained problem coercive.
    for (k, n, big_n) in [(2usize, 1usize, 64u64), (3, 2, 64)] {
        group.bench_function(format!("constrained_k{k}_N{big_n}"), |bench| {
            bench.iter(|| m_k_constrained(black_box(k), n, black_box(big_n)).unwrap())
        });
    }
    group.finish();
}

fn bench_minimize(c: &mut Criterion) {
    let mut group = c.benchmark_group("minimize");
    group.sample_size(10);
    for k in [2usize, 3] {
        let eps = 2.0f64.powi(-5);
        let data = GridSignal::from_fn(0.0, 1.0, 1025, |t| if t < 0.5 { -0.5 } else { 0.5 }).unwrap();
        let params = EnergyParams::denoising(k, eps, 1600.0, data.clone());
        let opts = MinimizeOptions { warmup: 400, ..MinimizeOptions::default() };
        group.bench_function(format!("step_k{k}_n1025"), |bench| {
            bench.iter(|| minimize(black_box(&data), black_box(&params), black_box(&opts)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_hermite_profile, bench_m_k, bench_minimize);
criterion_main!(benches);
