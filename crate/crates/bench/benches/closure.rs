use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use perclab_core::montecarlo::{estimate_p, sample_config, SampleMode};
use perclab_core::*;
use std::hint::black_box;

fn closure_large_square(c: &mut Criterion) {
    let structure = build_structure(1024, 2, 0, 2, false).unwrap();
    let initial = sample_config(structure.shape(), 0.05, 1, 0, SampleMode::Direct).unwrap();
    let mut engine = ClosureEngine::new();
    c.bench_function("closure 1024^2 r=2 p=0.05", |b| {
        b.iter_batched_ref(
            || initial.clone(),
            |state| engine.run(&structure, state).unwrap(),
            BatchSize::LargeInput,
        )
    });
}

fn closure_doubled_cube(c: &mut Criterion) {
    let structure = build_structure(48, 3, 1, 3, true).unwrap();
    let initial = sample_config(structure.shape(), 0.08, 2, 0, SampleMode::Direct).unwrap();
    let mut engine = ClosureEngine::new();
    c.bench_function("closure 49^3x2 r=3 ell=1 p=0.08", |b| {
        b.iter_batched_ref(
            || initial.clone(),
            |state| engine.run(&structure, state).unwrap(),
            BatchSize::LargeInput,
        )
    });
}

fn sampling(c: &mut Criterion) {
    let shape = GridShape::cube(1024, 2, 0, false).unwrap();
    c.bench_function("sample 1024^2 direct", |b| {
        b.iter(|| sample_config(&shape, black_box(0.05), 1, 0, SampleMode::Direct).unwrap())
    });
    c.bench_function("sample 1024^2 coupled", |b| {
        b.iter(|| sample_config(&shape, black_box(0.05), 1, 0, SampleMode::CoupledField).unwrap())
    });
}

fn estimate(c: &mut Criterion) {
    let mut group = c.benchmark_group("estimate");
    group.sample_size(10);
    let opts = RunOptions::new(1000, 7).with_workers(1);
    group.bench_function("n=64 p=0.1 1000 trials", |b| {
        b.iter(|| estimate_p(64, 2, 0, 2, black_box(0.1), &opts).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    closure_large_square,
    closure_doubled_cube,
    sampling,
    estimate
);
criterion_main!(benches);
