use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dowsim_core::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn packet(dim: usize, n: usize) -> Wavefield {
    let g = GridSpec::new(dim, n, -16.0, 16.0).unwrap();
    gaussian_packet(g, Position::at_xy(0.0, 0.0), 2.0, [1.0, 0.5]).unwrap()
}

fn propagation(c: &mut Criterion) {
    let units = UnitSystem::natural();
    let mut group = c.benchmark_group("step");
    for (dim, n) in [(1, 1024), (1, 16384), (2, 128), (2, 256)] {
        let mut psi = packet(dim, n);
        let mut prop = Propagator::new(psi.grid(), &Potential::harmonic(0.1), 0.01, &units).unwrap();
        group.bench_with_input(BenchmarkId::new(format!("{dim}d"), n), &n, |b, _| {
            b.iter(|| prop.step_in_place(black_box(&mut psi)).unwrap())
        });
    }
    group.finish();
}

fn sampling(c: &mut Criterion) {
    let psi = packet(2, 256);
    let sampler = BornSampler::new(&psi).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    c.bench_function("born_sample/2d/256", |b| b.iter(|| black_box(sampler.sample(&mut rng))));
    c.bench_function("born_sampler_build/2d/256", |b| {
        b.iter(|| BornSampler::new(black_box(&psi)).unwrap())
    });
}

fn collapse(c: &mut Criterion) {
    let psi = packet(2, 256);
    let op = CollapseOperator::default_for(psi.grid());
    let at = Position::at_xy(0.3, -0.2);
    c.bench_function("apply_collapse/2d/256", |b| {
        b.iter(|| apply_collapse(black_box(&psi), at, &op).unwrap())
    });
    let units = UnitSystem::natural();
    c.bench_function("spreads/2d/256", |b| {
        b.iter(|| (black_box(&psi).position_spread(), psi.momentum_spread(&units)))
    });
}

criterion_group!(kernels, propagation, sampling, collapse);
criterion_main!(kernels);
