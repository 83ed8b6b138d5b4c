use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use fwm_core::atomic::{
    default_velocity_grid, velocity_scan, velocity_scan_sequential, Normalization, ThreeLevelParams,
    VaporParams,
};
use fwm_core::parallel;
use fwm_core::tomography::{default_settings, ml_reconstruct, simulate_counts, DensityMatrix4, MlOptions};

fn scan(c: &mut Criterion) {
    let p = ThreeLevelParams::rb87_diamond();
    let vapor = VaporParams::rb87_celsius(80.0);
    let grid = default_velocity_grid(&vapor);
    let mut g = c.benchmark_group("velocity_scan_2001");
    g.bench_function("parallel", |b| {
        b.iter(|| velocity_scan(black_box(&p), &vapor, &grid, Normalization::Peak).unwrap())
    });
    g.bench_function("sequential", |b| {
        b.iter(|| velocity_scan_sequential(black_box(&p), &vapor, &grid, Normalization::Peak).unwrap())
    });
    g.finish();
}

fn tomography(c: &mut Criterion) {
    let data = simulate_counts(&DensityMatrix4::werner(0.9), &default_settings(), 100_000, 0);
    let opts = MlOptions::default();
    let mut g = c.benchmark_group("ml_restarts_32");
    g.sample_size(20);
    for workers in [1, 0] {
        let label = if workers == 1 { "one_thread" } else { "all_threads" };
        g.bench_with_input(BenchmarkId::from_parameter(label), &workers, |b, &w| {
            b.iter(|| parallel::with_workers(w, || ml_reconstruct(black_box(&data), &opts).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, scan, tomography);
criterion_main!(benches);
