//! End-to-end stage benchmarks: mask generation, Monte Carlo simulation,
//! emulator training and prediction, and the surrogate search.

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use thinarray_bench::{probe_inputs, synthetic_dataset};
use thinarray_core::array_gen::{generate_mask, LatticeSpec, ProbabilityProfile};
use thinarray_core::emulator::{EmulatorModel, ForestParams, ModelSpec};
use thinarray_core::net_sim::{simulate, InputConfig, NetworkConfig};
use thinarray_core::optimizer::{optimize, Bounds, ModelPair};

fn bench_mask_generation(c: &mut Criterion) {
    let lattice = LatticeSpec::new(100, 99, 0.866, 0.761).unwrap();
    let profile = ProbabilityProfile::new(3.0, 1.0).unwrap();
    let mut seed = 0u64;
    c.bench_function("generate_mask_100x99", |b| {
        b.iter(|| {
            seed = seed.wrapping_add(1);
            black_box(generate_mask(&lattice, &profile, 64, seed).unwrap())
        })
    });
}

fn bench_simulation(c: &mut Criterion) {
    let cfg = NetworkConfig::default();
    let input = InputConfig::new(0.866, 0.761, 5.0, 1.0).unwrap();
    let mut group = c.benchmark_group("simulate");
    group.sample_size(10);
    for n_iter in [10usize, 100] {
        group.bench_with_input(BenchmarkId::from_parameter(n_iter), &n_iter, |b, &n| {
            b.iter(|| black_box(simulate(&input, &cfg, (100, 99), 64, n, 7).unwrap()))
        });
    }
    group.finish();
}

fn bench_emulator(c: &mut Criterion) {
    let dataset = synthetic_dataset(800, 1);
    let spec = ModelSpec::RandomForest(ForestParams::default());

    let mut group = c.benchmark_group("forest");
    group.sample_size(10);
    group.bench_function("train_800_rows", |b| {
        b.iter(|| black_box(EmulatorModel::train(&dataset.rows, &spec, 5).unwrap()))
    });
    group.finish();

    let model = EmulatorModel::train(&dataset.rows, &spec, 5).unwrap();
    let probes = probe_inputs(512, 2);
    let mut at = 0usize;
    c.bench_function("forest_predict", |b| {
        b.iter(|| {
            at = (at + 1) % probes.len();
            black_box(model.predict(&probes[at]).unwrap())
        })
    });
}

fn bench_optimizer(c: &mut Criterion) {
    let dataset = synthetic_dataset(400, 3);
    let spec = ModelSpec::RandomForest(ForestParams {
        n_trees: 50,
        ..ForestParams::default()
    });
    let model = EmulatorModel::train(&dataset.rows, &spec, 4).unwrap();
    let pair = ModelPair {
        mean: &model,
        p5: &model,
    };
    let mut group = c.benchmark_group("optimize");
    group.sample_size(10);
    group.bench_function("budget_2000", |b| {
        b.iter(|| black_box(optimize(&pair, &Bounds::default(), 6.0, 2000, 11).unwrap()))
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_mask_generation,
    bench_simulation,
    bench_emulator,
    bench_optimizer
);
criterion_main!(benches);
