use qdiffusion::ansatz::{build_hardware_adapted, export_qasm, hardware_config, ExportBindings};
use qdiffusion::diffusion::{
    make_linear_schedule, sample, train, LabelHandling, PairSampling, SampleOptions, TrainingItem,
};
use qdiffusion::{AnsatzConfig, Checkpoint, TrainingConfig};

fn unit(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

fn toy_items(n_label: bool) -> Vec<TrainingItem> {
    (0..12)
        .map(|i| {
            let k = i % 2;
            let v = if k == 0 {
                [0.9, 0.3, 0.2, 0.1]
            } else {
                [0.1, 0.2, 0.3, 0.9]
            };
            TrainingItem::new(unit(&v), n_label.then_some(k))
        })
        .collect()
}

#[test]
fn checkpoint_round_trip_preserves_sampling() {
    let mut cfg = TrainingConfig::new(
        make_linear_schedule(3, 0.1, 0.6).unwrap(),
        AnsatzConfig::reverse_bottleneck(2, 0, [1, 1, 1]),
    );
    cfg.epochs = 2;
    cfg.pair_sampling = PairSampling::SharedNoise;
    let ck = train(&toy_items(false), &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ck.json");
    ck.save(&path).unwrap();
    let back = Checkpoint::load(&path).unwrap();
    assert_eq!(back, ck);
    let a = sample(&ck, &SampleOptions::new(4), &mut qdiffusion::rng::seeded(1)).unwrap();
    let b = sample(&back, &SampleOptions::new(4), &mut qdiffusion::rng::seeded(1)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn trained_hardware_model_exports_and_samples() {
    let mut cfg = TrainingConfig::new(make_linear_schedule(3, 0.05, 0.8).unwrap(), hardware_config());
    cfg.epochs = 1;
    let ck = train(&toy_items(true), &cfg).unwrap();
    let circuit = build_hardware_adapted().unwrap();
    let params: Vec<f64> = (1..=3).rev().flat_map(|t| ck.params_for(t).to_vec()).collect();
    let prior = [0.5, 0.5, 0.5, 0.5].map(|x| qdiffusion::Complex64::new(x, 0.0));
    let text = export_qasm(
        &circuit,
        &ExportBindings {
            params: &params,
            input: Some(&prior),
            label: Some(1),
            measure_output: true,
        },
    )
    .unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("cx ")).count(), 37);
    let mut opts = SampleOptions::new(5);
    opts.label = Some(1);
    opts.label_handling = LabelHandling::Restore;
    let out = sample(&ck, &opts, &mut qdiffusion::rng::seeded(2)).unwrap();
    for s in &out.samples {
        assert_eq!(s.len(), 4);
        assert!((s.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-9);
    }
}
