use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qdiffusion::ansatz::{execute, LabelPolicy, MeasurementMode};
use qdiffusion::rng::seeded;
use qdiffusion::statevec::Axis;
use qdiffusion_bench::{random_circuit, random_state};

fn gate_kernels(c: &mut Criterion) {
    let mut group = c.benchmark_group("kernels");
    for n in [4, 8, 12] {
        let s = random_state(n, 1);
        group.bench_with_input(BenchmarkId::new("ry", n), &n, |b, &n| {
            let mut st = s.clone();
            b.iter(|| st.rotate(n / 2, Axis::Y, black_box(0.3)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("cnot", n), &n, |b, &n| {
            let mut st = s.clone();
            b.iter(|| st.cnot(0, n - 1).unwrap())
        });
    }
    group.finish();
}

fn circuits(c: &mut Criterion) {
    let mut group = c.benchmark_group("reverse_bottleneck");
    for (n, layers) in [(3, [5, 6, 5]), (3, [15, 20, 15]), (8, [30, 40, 30])] {
        let (circuit, params) = random_circuit(n, layers, 2);
        let input = random_state(n, 3);
        let id = format!("{n}q_{}", layers.iter().sum::<usize>());
        group.bench_function(BenchmarkId::new("ensemble", &id), |b| {
            b.iter(|| execute(&circuit, &params, &input, MeasurementMode::Ensemble, LabelPolicy::None).unwrap())
        });
        let mut rng = seeded(4);
        group.bench_function(BenchmarkId::new("sample", &id), |b| {
            b.iter(|| {
                execute(
                    &circuit,
                    &params,
                    &input,
                    MeasurementMode::Sample(&mut rng),
                    LabelPolicy::None,
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, gate_kernels, circuits);
criterion_main!(benches);
