use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use emergent_bench::{box_grid, drift_diffusion, harmonic, hydro, packet};
use emergent_core::madelung::madelung_step;
use emergent_core::measurement::{conjugated_operators, random_diagonal_set, random_hermitian};
use emergent_core::microdynamics::{evolve_fokker_planck, FokkerPlanckConfig, ParticleEnsemble, Scheme};
use emergent_core::schrodinger::{evolve, stationary_states, EvolveConfig, Propagator};
use emergent_core::thermo::{sample_pool, NeuronPool};
use emergent_core::{Boundary, ScalarField};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fokker_planck(c: &mut Criterion) {
    let (params, model) = drift_diffusion();
    let mut group = c.benchmark_group("fokker_planck_100_steps");
    for (dims, n) in [(1, 401), (2, 64)] {
        let grid = box_grid(dims, n, 3.0, Boundary::Reflecting);
        let p0 = ScalarField::constant(&grid, 1.0).normalized().unwrap();
        for scheme in [Scheme::Explicit, Scheme::Implicit] {
            let dt = if scheme == Scheme::Explicit { 1e-4 } else { 1e-2 };
            let cfg = FokkerPlanckConfig::new(dt, 100, scheme);
            group.bench_function(BenchmarkId::new(format!("{scheme:?}"), format!("{dims}d")), |b| {
                b.iter(|| evolve_fokker_planck(black_box(&p0), &model, &params, &cfg).unwrap())
            });
        }
    }
    group.finish();
}

fn langevin(c: &mut Criterion) {
    let (params, model) = drift_diffusion();
    let grid = box_grid(1, 101, 3.0, Boundary::Reflecting);
    c.bench_function("langevin_step_1e5", |b| {
        let mut ens = ParticleEnsemble::uniform(&grid, 100_000, 1).unwrap();
        b.iter(|| ens.step(&model, &params, 0.01).unwrap())
    });
}

fn schrodinger(c: &mut Criterion) {
    let mut group = c.benchmark_group("schrodinger_100_steps");
    for (dims, n) in [(1, 512), (2, 128)] {
        let grid = box_grid(dims, n, 8.0, Boundary::Periodic);
        let (wf, v) = (packet(&grid), harmonic(&grid));
        for prop in [Propagator::SplitStep, Propagator::CrankNicolson] {
            let cfg = EvolveConfig::new(0.005, 100).with_propagator(prop);
            group.bench_function(BenchmarkId::new(format!("{prop:?}"), format!("{dims}d")), |b| {
                b.iter(|| evolve(black_box(&wf), &v, &cfg).unwrap())
            });
        }
    }
    group.finish();

    let grid = box_grid(1, 401, 8.0, Boundary::Reflecting);
    let v = harmonic(&grid);
    c.bench_function("spectrum_1d_4_states", |b| b.iter(|| stationary_states(black_box(&v), 1.0, 1.0, 4).unwrap()));
}

fn madelung(c: &mut Criterion) {
    let grid = box_grid(2, 64, 6.0, Boundary::Reflecting);
    let (state, v) = (hydro(&grid), harmonic(&grid));
    let dt = state.stable_dt();
    c.bench_function("madelung_step_2d_64", |b| b.iter(|| madelung_step(black_box(&state), &v, dt).unwrap()));
}

fn measurement(c: &mut Criterion) {
    let mut group = c.benchmark_group("conjugated_operators");
    for m in [4, 16, 64] {
        let mut rng = ChaCha8Rng::seed_from_u64(m as u64);
        let h = random_hermitian(m, &mut rng);
        let set = random_diagonal_set(m, 4, &mut rng);
        group.bench_function(BenchmarkId::from_parameter(m), |b| {
            b.iter(|| conjugated_operators(black_box(&set), &h, 1.0, 1.0).unwrap())
        });
    }
    group.finish();
}

fn thermo(c: &mut Criterion) {
    let pool = NeuronPool::new(100, 0.0, 1.0, 0.0, 50).unwrap();
    c.bench_function("pool_1000_sweeps", |b| b.iter(|| sample_pool(black_box(&pool), 1000, 3).unwrap()));
}

criterion_group!(benches, fokker_planck, langevin, schrodinger, madelung, measurement, thermo);
criterion_main!(benches);
