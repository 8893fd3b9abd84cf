use std::f64::consts::{FRAC_PI_3, FRAC_PI_4};
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qwalk_core::{
    entropy_trace, evolve, exact_dispersion, k_grid, max_group_speed, CoinSchedule, InitialCoinState,
    PositionProfile,
};

fn evolution(c: &mut Criterion) {
    let mut g = c.benchmark_group("evolve");
    for t in [200u64, 1000] {
        let schedules = [
            ("homogeneous", CoinSchedule::homogeneous(FRAC_PI_4)),
            ("two_period", CoinSchedule::two_period(FRAC_PI_4, FRAC_PI_3)),
            ("split_step", CoinSchedule::split_step(FRAC_PI_4, FRAC_PI_3)),
        ];
        for (name, s) in schedules {
            g.bench_with_input(BenchmarkId::new(name, t), &t, |b, &t| {
                b.iter(|| evolve(InitialCoinState::SYMMETRIC, PositionProfile::point(0), black_box(&s), t, &[]).unwrap())
            });
        }
    }
    g.finish();
}

fn spectra(c: &mut Criterion) {
    let ks = k_grid(1001);
    let s = CoinSchedule::n_period(3, FRAC_PI_4, FRAC_PI_3).unwrap();
    c.bench_function("exact_dispersion/three_period_1001", |b| {
        b.iter(|| exact_dispersion(black_box(&s), &ks).unwrap())
    });
    c.bench_function("max_group_speed/three_period", |b| b.iter(|| max_group_speed(black_box(&s)).unwrap()));
}

fn entanglement(c: &mut Criterion) {
    let s = CoinSchedule::n_period(3, FRAC_PI_4, FRAC_PI_3).unwrap();
    c.bench_function("entropy_trace/three_period_200", |b| {
        b.iter(|| entropy_trace(InitialCoinState::SYMMETRIC, PositionProfile::point(0), black_box(&s), 200).unwrap())
    });
}

criterion_group!(benches, evolution, spectra, entanglement);
criterion_main!(benches);
