use std::fs;

use anyhow::Context as _;
use qdiffusion::ansatz::{
    build_circuit, build_hardware_adapted, execute, export_qasm, ExportBindings, LabelPolicy, MeasurementMode,
    NoiseModel, HARDWARE_REPETITIONS,
};
use qdiffusion::data::{tile_grid, write_csv, write_pgm};
use qdiffusion::diffusion::{
    decode_data, denoise_chain, init_params, make_linear_schedule, prior_state, sample, LabelHandling, SampleOptions,
    SampleStats, TrainingItem,
};
use qdiffusion::format::fmt_f64_17;
use qdiffusion::latent::{ae_train_with, AeConfig, AutoencoderParams};
use qdiffusion::metrics::{
    accuracy, fit_gaussian, fit_gmm, frechet_distance, pca_fit, pca_project, roc_auc, train_binary_classifier, wam,
    write_scatter_svg, ClassifierConfig,
};
use qdiffusion::rng::{derive, normal_vector};
use qdiffusion::statevec::{amplitude_encode, sample_counts};
use qdiffusion::{Checkpoint, NoiseSchedule, QuantumState, TrainingConfig};

use crate::config::Preset;
use crate::error::CliError;
use crate::run::{features, image_side, relative, to_images, Context};

type Out = Result<(), CliError>;

fn report(ctx: &Context, path: &std::path::Path) {
    println!("wrote {}", relative(&ctx.run_dir, path));
}

fn f17(x: f64) -> String {
    fmt_f64_17(x)
}

pub fn train_ae(ctx: &Context) -> Out {
    let Some(sec) = &ctx.cfg.autoencoder else {
        return Err(CliError::Config(format!(
            "preset {} has no autoencoder section",
            ctx.cfg.preset.name()
        )));
    };
    let ds = ctx.train_set()?;
    let cfg = AeConfig {
        input_dim: ds.rows * ds.cols,
        hidden: sec.hidden,
        latent_dim: sec.latent_dim,
        activation: sec.activation,
        learning_rate: sec.learning_rate,
        epochs: sec.epochs,
        batch_size: sec.batch_size,
        seed: ctx.cfg.seeds.autoencoder,
    };
    let ae = ae_train_with(&ds.images, &cfg, |e, mse| {
        eprintln!("autoencoder epoch {} mse {mse:.6}", e + 1)
    })?;
    let path = ctx.path("autoencoder.json");
    ae.save(&path)?;
    report(ctx, &path);
    let rows: Vec<Vec<String>> = ae
        .loss_history
        .iter()
        .enumerate()
        .map(|(e, l)| vec![(e + 1).to_string(), f17(*l)])
        .collect();
    let csv = ctx.subdir("metrics")?.join("autoencoder_loss.csv");
    write_csv(&csv, &["epoch", "mse"], &rows)?;
    report(ctx, &csv);
    Ok(())
}

fn training_config(ctx: &Context) -> Result<TrainingConfig, CliError> {
    let m = &ctx.cfg.model;
    let schedule = if m.steps == 0 {
        NoiseSchedule::from_betas(Vec::new())?
    } else {
        make_linear_schedule(m.steps, m.beta_start, m.beta_end)?
    };
    let mut tc = TrainingConfig::new(schedule, m.ansatz.clone());
    tc.complex_noise = m.complex_noise;
    tc.share_params_across_t = m.share_params_across_t;
    tc.pair_sampling = m.pair_sampling;
    tc.gradient_method = m.gradient_method;
    tc.batch_size = m.batch_size;
    tc.epochs = m.epochs;
    tc.learning_rate = m.learning_rate;
    tc.seed = ctx.cfg.seeds.training;
    tc.validate()?;
    Ok(tc)
}

pub fn train_qdm(ctx: &Context) -> Out {
    let ae = ctx.autoencoder()?;
    let ds = ctx.train_set()?.take(ctx.cfg.model.train_items);
    let vectors = features(ae.as_ref(), &ds.images)?;
    let conditioned = ctx.cfg.conditioned();
    let items: Vec<TrainingItem> = vectors
        .into_iter()
        .zip(&ds.labels)
        .map(|(v, &l)| TrainingItem::new(v, conditioned.then_some(l as usize)))
        .collect();
    let tc = training_config(ctx)?;
    eprintln!("training on {} vectors, {} steps", items.len(), tc.schedule.steps());
    let ck = qdiffusion::diffusion::train_with(&items, &tc, |e, loss| {
        eprintln!("qdm epoch {} infidelity {loss:.6}", e + 1)
    })?;
    let path = ctx.path("checkpoint.json");
    ck.save(&path)?;
    report(ctx, &path);
    let rows: Vec<Vec<String>> = ck
        .loss_history
        .iter()
        .enumerate()
        .map(|(e, l)| vec![(e + 1).to_string(), f17(*l)])
        .collect();
    let csv = ctx.subdir("metrics")?.join("training_loss.csv");
    write_csv(&csv, &["epoch", "infidelity"], &rows)?;
    report(ctx, &csv);
    Ok(())
}

struct Generated {
    vectors: Vec<Vec<f64>>,
    labels: Vec<Option<u8>>,
    stats: SampleStats,
}

/// `total` samples, split evenly across classes for conditioned models unless
/// `fixed` pins one label.
fn generate(ctx: &Context, ck: &Checkpoint, total: usize, fixed: Option<u8>, seed: u64) -> Result<Generated, CliError> {
    let s = &ctx.cfg.sampling;
    let plan: Vec<(Option<u8>, usize)> = match (ctx.cfg.conditioned(), fixed) {
        (false, _) => vec![(None, total)],
        (true, Some(k)) => vec![(Some(k), total)],
        (true, None) => {
            let classes = ctx.cfg.classes();
            let nc = classes.len();
            classes
                .iter()
                .enumerate()
                .map(|(j, &k)| (Some(k), total / nc + usize::from(j < total % nc)))
                .filter(|&(_, n)| n > 0)
                .collect()
        }
    };
    let mut rng = derive(seed, 0);
    let mut out = Generated {
        vectors: Vec::with_capacity(total),
        labels: Vec::with_capacity(total),
        stats: SampleStats::default(),
    };
    for (label, count) in plan {
        let mut opts = SampleOptions::new(count);
        opts.label = label.map(usize::from);
        opts.measurement = s.measurement;
        opts.label_handling = s.label_handling;
        opts.max_attempts = s.max_attempts;
        let run = sample(ck, &opts, &mut rng)?;
        out.stats.attempts += run.stats.attempts;
        out.stats.accepted += run.stats.accepted;
        out.stats.reruns += run.stats.reruns;
        out.labels.extend(std::iter::repeat_n(label, run.samples.len()));
        out.vectors.extend(run.samples);
    }
    Ok(out)
}

fn label_text(l: Option<u8>) -> String {
    l.map(|k| k.to_string()).unwrap_or_default()
}

pub fn sample_cmd(ctx: &Context) -> Out {
    let ck = ctx.checkpoint()?;
    let ae = ctx.autoencoder()?;
    let s = &ctx.cfg.sampling;
    let g = generate(ctx, &ck, s.count, s.label, ctx.cfg.seeds.sampling)?;
    let images = to_images(ae.as_ref(), &g.vectors)?;
    let dir = ctx.subdir("samples")?;
    let side = image_side(images[0].len());
    for (i, img) in images.iter().enumerate() {
        write_pgm(&dir.join(format!("sample_{i:03}.pgm")), img, side, side)?;
    }
    println!("wrote {} images to samples/", images.len());
    let (w, h, px) = tile_grid(&images, side, s.grid_columns)?;
    let grid = dir.join("grid.pgm");
    write_pgm(&grid, &px, w, h)?;
    report(ctx, &grid);

    let dim = g.vectors[0].len();
    let mut header = vec!["index".to_string(), "label".to_string()];
    header.extend((0..dim).map(|j| format!("v{j}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<String>> = g
        .vectors
        .iter()
        .zip(&g.labels)
        .enumerate()
        .map(|(i, (v, l))| {
            let mut row = vec![i.to_string(), label_text(*l)];
            row.extend(v.iter().map(|x| f17(*x)));
            row
        })
        .collect();
    let csv = dir.join("samples.csv");
    write_csv(&csv, &header, &rows)?;
    report(ctx, &csv);

    let stats = ctx.subdir("metrics")?.join("sampling.csv");
    write_csv(
        &stats,
        &["attempts", "accepted", "reruns", "acceptance_rate"],
        &[vec![
            g.stats.attempts.to_string(),
            g.stats.accepted.to_string(),
            g.stats.reruns.to_string(),
            f17(g.stats.acceptance_rate()),
        ]],
    )?;
    report(ctx, &stats);
    Ok(())
}

/// Feature space for distribution metrics: latents for latent models, a PCA
/// projection fitted on the reference set otherwise.
fn metric_space(
    ctx: &Context,
    ae: Option<&AutoencoderParams>,
    real: Vec<Vec<f64>>,
    generated: &[Vec<f64>],
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>), CliError> {
    if ae.is_some() {
        return Ok((real, generated.to_vec()));
    }
    let dims = ctx.cfg.evaluation.pca_features.min(real[0].len());
    let p = pca_fit(&real, dims)?;
    Ok((pca_project(&p, &real)?, pca_project(&p, generated)?))
}

pub fn evaluate(ctx: &Context) -> Out {
    let ck = ctx.checkpoint()?;
    let ae = ctx.autoencoder()?;
    let e = &ctx.cfg.evaluation;
    let test = ctx.test_set()?;
    let real = features(ae.as_ref(), &test.images)?;
    let g = generate(ctx, &ck, e.samples, None, ctx.cfg.seeds.evaluation)?;
    let (real_f, gen_f) = metric_space(ctx, ae.as_ref(), real, &g.vectors)?;

    let mut rows: Vec<(String, f64)> = Vec::new();
    let fd = frechet_distance(&fit_gaussian(&gen_f)?, &fit_gaussian(&real_f)?)?;
    rows.push(("frechet_distance".into(), fd));
    let seed = ctx.cfg.seeds.evaluation;
    let w = wam(
        &fit_gmm(&gen_f, e.gmm_components, seed)?,
        &fit_gmm(&real_f, e.gmm_components, seed)?,
    )?;
    rows.push(("wam".into(), w));
    rows.push(("acceptance_rate".into(), g.stats.acceptance_rate()));

    if ctx.cfg.conditioned() {
        let train = ctx.train_set()?;
        let images = to_images(ae.as_ref(), &g.vectors)?;
        for k in ctx.cfg.classes() {
            let cc = ClassifierConfig {
                hidden: e.classifier_hidden,
                epochs: e.classifier_epochs,
                learning_rate: e.classifier_learning_rate,
                seed,
                ..ClassifierConfig::default()
            };
            let clf = train_binary_classifier(k, &train.images, &train.labels, &cc)?;
            rows.push((
                format!("classifier_accuracy_{k}"),
                accuracy(&clf, &test.images, &test.labels),
            ));
            let (mut pos, mut neg) = (Vec::new(), Vec::new());
            for (img, l) in images.iter().zip(&g.labels) {
                let s = clf.score(img);
                if *l == Some(k) {
                    pos.push(s)
                } else {
                    neg.push(s)
                }
            }
            if !pos.is_empty() && !neg.is_empty() {
                rows.push((format!("roc_auc_{k}"), roc_auc(&pos, &neg)?));
            }
        }
    }
    for (name, v) in &rows {
        println!("{name} {v:.6}");
    }
    let csv = ctx.subdir("metrics")?.join("evaluation.csv");
    let rows: Vec<Vec<String>> = rows.into_iter().map(|(n, v)| vec![n, f17(v)]).collect();
    write_csv(&csv, &["metric", "value"], &rows)?;
    report(ctx, &csv);
    Ok(())
}

/// Checkpoint parameters when one exists, otherwise the seeded initial
/// parameters of the configured model.
fn export_params(ctx: &Context) -> Result<Checkpoint, CliError> {
    if let Some(ck) = ctx.checkpoint_if_present()? {
        return Ok(ck);
    }
    eprintln!("no checkpoint found; exporting initial parameters");
    let tc = training_config(ctx)?;
    let params = init_params(&tc)?;
    Ok(Checkpoint::new(tc, params, Vec::new())?)
}

fn default_label(ctx: &Context) -> Option<usize> {
    ctx.cfg
        .conditioned()
        .then(|| usize::from(ctx.cfg.sampling.label.unwrap_or(ctx.cfg.classes()[0])))
}

pub fn export_qasm_cmd(ctx: &Context) -> Out {
    let ck = export_params(ctx)?;
    let dir = ctx.subdir("qasm")?;
    let label = default_label(ctx);
    if ctx.cfg.preset == Preset::Hardware {
        if ck.steps() != HARDWARE_REPETITIONS || ck.config.ansatz != qdiffusion::ansatz::hardware_config() {
            return Err(CliError::Config(format!(
                "hardware export needs the {HARDWARE_REPETITIONS}-step hardware ansatz"
            )));
        }
        let circuit = build_hardware_adapted()?;
        let params: Vec<f64> = (1..=ck.steps()).rev().flat_map(|t| ck.params_for(t).to_vec()).collect();
        let mut rng = derive(ctx.cfg.seeds.sampling, 0);
        let noise = normal_vector(&mut rng, 1 << ck.config.ansatz.n_data, ck.config.complex_noise);
        let prior = amplitude_encode(&noise, true)?;
        let text = export_qasm(
            &circuit,
            &ExportBindings {
                params: &params,
                input: Some(prior.amplitudes()),
                label,
                measure_output: true,
            },
        )?;
        let path = dir.join("hardware.qasm");
        fs::write(&path, &text).context("writing QASM")?;
        report(ctx, &path);
        println!("cx gates {}", text.lines().filter(|l| l.starts_with("cx ")).count());
        return Ok(());
    }
    let circuit = build_circuit(&ck.config.ansatz)?;
    for t in 1..=ck.steps() {
        let text = export_qasm(
            &circuit,
            &ExportBindings {
                params: ck.params_for(t),
                input: None,
                label,
                measure_output: false,
            },
        )?;
        let path = dir.join(format!("step_{t:02}.qasm"));
        fs::write(&path, text).context("writing QASM")?;
        report(ctx, &path);
    }
    Ok(())
}

fn label_policy(ctx: &Context, label: Option<usize>) -> LabelPolicy {
    match (label, ctx.cfg.sampling.label_handling) {
        (None, _) => LabelPolicy::None,
        (Some(k), LabelHandling::Postselect) => LabelPolicy::Postselect(k),
        (Some(k), LabelHandling::Restore) => LabelPolicy::Restore(k),
    }
}

/// Exact data-register distribution of the full chain, with every ancilla
/// outcome kept as a weighted branch.
fn exact_distribution(
    ctx: &Context,
    ck: &Checkpoint,
    prior: &QuantumState,
    label: Option<usize>,
) -> Result<Vec<f64>, CliError> {
    let circuit = ck.circuit()?;
    let policy = label_policy(ctx, label);
    let mut branches = vec![(1.0, prior.clone())];
    for t in (1..=ck.steps()).rev() {
        let mut next = Vec::new();
        for (p, s) in &branches {
            let ens = execute(&circuit, ck.params_for(t), s, MeasurementMode::Ensemble, policy)?;
            next.extend(ens.into_branches().into_iter().map(|b| (p * b.probability, b.state)));
        }
        branches = next;
    }
    let n_label = ck.config.ansatz.n_label;
    let mut probs = vec![0.0; 1 << ck.config.ansatz.n_data];
    let mut total = 0.0;
    for (p, s) in &branches {
        for (acc, a) in probs.iter_mut().zip(decode_data(s, n_label)) {
            *acc += p * a * a;
        }
        total += p;
    }
    probs.iter_mut().for_each(|v| *v /= total);
    Ok(probs)
}

/// Measurement frequencies over `shots` independent sampled trajectories.
fn shot_distribution(
    ctx: &Context,
    ck: &Checkpoint,
    prior: &QuantumState,
    label: Option<usize>,
    noise: NoiseModel,
    stream: u64,
) -> Result<Vec<f64>, CliError> {
    let shots = ctx.cfg.noise_study.shots;
    let circuit = ck.circuit()?;
    let mut opts = SampleOptions::new(1);
    opts.label = label;
    opts.label_handling = ctx.cfg.sampling.label_handling;
    opts.noise = noise;
    let mut rng = derive(ctx.cfg.seeds.noise_study, stream);
    let mut stats = SampleStats::default();
    let mut counts = vec![0u64; 1 << ck.config.ansatz.n_data];
    for _ in 0..shots {
        let out = denoise_chain(ck, &circuit, prior.clone(), &opts, &mut rng, &mut stats)?;
        let probs: Vec<f64> = decode_data(&out, ck.config.ansatz.n_label)
            .iter()
            .map(|a| a * a)
            .collect();
        let hit = sample_counts(&probs, 1, &mut rng);
        counts.iter_mut().zip(hit).for_each(|(c, h)| *c += h);
    }
    Ok(counts.iter().map(|&c| c as f64 / shots as f64).collect())
}

pub fn noise_study(ctx: &Context) -> Out {
    let ck = ctx.checkpoint()?;
    let ns = &ctx.cfg.noise_study;
    let label = ctx
        .cfg
        .conditioned()
        .then(|| usize::from(ns.label.unwrap_or(ctx.cfg.classes()[0])));
    let prior = prior_state(&ck, label, &mut derive(ctx.cfg.seeds.noise_study, 0))?;
    let mut conditions: Vec<(String, String, Vec<f64>)> = Vec::new();
    conditions.push((
        "exact".into(),
        String::new(),
        exact_distribution(ctx, &ck, &prior, label)?,
    ));
    eprintln!("exact done; sampling {} shots per noisy condition", ns.shots);
    conditions.push((
        "shots".into(),
        ns.shots.to_string(),
        shot_distribution(ctx, &ck, &prior, label, NoiseModel::default(), 1)?,
    ));
    for (i, &p) in ns.depolarizing.iter().enumerate() {
        let noise = NoiseModel {
            depolarizing: p,
            readout: ns.readout,
        };
        let probs = shot_distribution(ctx, &ck, &prior, label, noise, 2 + i as u64)?;
        conditions.push(("depolarizing".into(), f17(p), probs));
    }
    let n = ck.config.ansatz.n_data;
    let mut rows = Vec::new();
    for (cond, param, probs) in &conditions {
        for (b, p) in probs.iter().enumerate() {
            rows.push(vec![cond.clone(), param.clone(), format!("{b:0n$b}"), f17(p.sqrt())]);
        }
    }
    let csv = ctx.subdir("metrics")?.join("noise_study.csv");
    write_csv(&csv, &["condition", "parameter", "basis_state", "amplitude"], &rows)?;
    report(ctx, &csv);
    Ok(())
}

pub fn plot_pca(ctx: &Context) -> Out {
    let ck = ctx.checkpoint()?;
    let ae = ctx.autoencoder()?;
    let test = ctx.test_set()?;
    let real = features(ae.as_ref(), &test.images)?;
    let g = generate(ctx, &ck, ctx.cfg.evaluation.samples, None, ctx.cfg.seeds.evaluation)?;
    let p = pca_fit(&real, 2)?;
    let rp = pca_project(&p, &real)?;
    let gp = pca_project(&p, &g.vectors)?;
    let dir = ctx.subdir("plots")?;
    let pts = |v: &[Vec<f64>]| v.iter().map(|x| (x[0], x[1])).collect::<Vec<_>>();
    let real_groups: Vec<usize> = test.labels.iter().map(|&l| l as usize).collect();
    let gen_groups: Vec<usize> = g.labels.iter().map(|l| l.map_or(0, usize::from)).collect();
    let a = dir.join("pca_real.svg");
    write_scatter_svg(
        &a,
        &pts(&rp),
        &real_groups,
        "Reference set, first two principal components",
    )?;
    report(ctx, &a);
    let b = dir.join("pca_generated.svg");
    write_scatter_svg(&b, &pts(&gp), &gen_groups, "Generated set, same projection")?;
    report(ctx, &b);
    let mut rows = Vec::new();
    for (src, proj, labels) in [
        (
            "reference",
            &rp,
            test.labels.iter().map(|&l| Some(l)).collect::<Vec<_>>(),
        ),
        ("generated", &gp, g.labels.clone()),
    ] {
        for (x, l) in proj.iter().zip(labels) {
            rows.push(vec![src.to_string(), label_text(l), f17(x[0]), f17(x[1])]);
        }
    }
    let csv = ctx.subdir("metrics")?.join("pca.csv");
    write_csv(&csv, &["source", "label", "pc1", "pc2"], &rows)?;
    report(ctx, &csv);
    Ok(())
}
