use criterion::{criterion_group, criterion_main, Criterion};
use qdiffusion::diffusion::{
    default_schedule, draw_pair, init_params, parameter_shift_grad, sample, PairSampling, SampleOptions, TrainingPair,
};
use qdiffusion::rng::seeded;
use qdiffusion::{AnsatzConfig, Checkpoint, TrainingConfig};
use qdiffusion_bench::random_circuit;

fn unit(n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / norm).collect()
}

fn gradient(c: &mut Criterion) {
    let sched = default_schedule(8).unwrap();
    let mut rng = seeded(5);
    let pairs: Vec<TrainingPair> = (1..=8)
        .map(|t| draw_pair(&unit(8), t, &sched, PairSampling::SharedNoise, true, None, &mut rng).unwrap())
        .collect();
    let refs: Vec<&TrainingPair> = pairs.iter().collect();
    let mut group = c.benchmark_group("parameter_shift");
    group.sample_size(20);
    for layers in [[5, 6, 5], [15, 20, 15]] {
        let (circuit, params) = random_circuit(3, layers, 6);
        group.bench_function(format!("3q_{}_batch8", layers.iter().sum::<usize>()), |b| {
            b.iter(|| parameter_shift_grad(&circuit, &params, &refs).unwrap())
        });
    }
    group.finish();
}

fn sampling(c: &mut Criterion) {
    let cfg = TrainingConfig::new(
        default_schedule(8).unwrap(),
        AnsatzConfig::reverse_bottleneck(3, 0, [15, 20, 15]),
    );
    let ck = Checkpoint::new(cfg.clone(), init_params(&cfg).unwrap(), Vec::new()).unwrap();
    c.bench_function("sample_chain_latent_x16", |b| {
        let mut rng = seeded(7);
        b.iter(|| sample(&ck, &SampleOptions::new(16), &mut rng).unwrap())
    });
}

criterion_group!(benches, gradient, sampling);
criterion_main!(benches);
