use learnpool_core::classifier::{Activation, ClassifierState};
use learnpool_core::codebook::{learn_codebook, CodebookParams, PatchParams};
use learnpool_core::dataset::{generate_synthetic, quadrant_variances, split, ImageSample, CHANNELS};
use learnpool_core::pooling::{fit_norm_stats, init_quadrant_maps, NormStats};
use learnpool_core::training::{evaluate, plan_protocol, run_phase1, run_phase2, run_trial, TrainConfig};
use learnpool_core::{seeded_rng, Error};
use rand::Rng as _;

fn tiny() -> TrainConfig {
    TrainConfig {
        k: 6,
        w: 3,
        n: 8,
        hidden: 8,
        phase1_examples: 1000,
        phase2_examples: 300,
        val_check_interval: 50,
        codebook_patches: 1000,
        synthetic_count: 120,
        eta_pool: 1e-2,
        ..TrainConfig::desk()
    }
}

fn data(cfg: &TrainConfig) -> Vec<ImageSample> {
    generate_synthetic(cfg.synthetic_count, cfg.n, cfg.seed).unwrap()
}

#[test]
fn zero_pool_rate_keeps_history_flat() {
    let cfg = TrainConfig { eta_pool: 0.0, ..tiny() };
    let out = run_trial(&cfg, &data(&cfg)).unwrap();
    let r = &out.report;
    assert_eq!(r.final_maps, out.initial_maps);
    assert_eq!(r.best_maps, out.initial_maps);
    assert_eq!(r.best_post_pool_acc, r.baseline_val_acc);
    let first = r.history[0];
    for row in &r.history {
        assert_eq!(row.val_acc, first.val_acc);
        assert_eq!(row.loss, first.loss);
    }
}

#[test]
fn phase_two_leaves_classifier_and_stats_untouched() {
    let cfg = tiny();
    let out = run_trial(&cfg, &data(&cfg)).unwrap();
    let r = &out.report;
    assert_eq!(r.classifier_checksum.0, r.classifier_checksum.1);
    assert_eq!(r.stats_checksum.0, r.stats_checksum.1);
    assert_eq!(r.classifier_checksum.0, out.classifier.checksum());
    assert_ne!(r.final_maps, out.initial_maps);
}

#[test]
fn history_layout_follows_the_plan() {
    let cfg = tiny();
    let out = run_trial(&cfg, &data(&cfg)).unwrap();
    let plan = plan_protocol(&cfg);
    let h = &out.report.history;
    assert_eq!(h.len(), plan.validation_checks);
    assert_eq!((h[0].examples_seen, h[0].phase), (cfg.phase1_examples, 1));
    let seen: Vec<usize> = h[1..].iter().map(|r| r.examples_seen).collect();
    assert_eq!(seen, plan.check_points);
    assert!(h[1..].iter().all(|r| r.phase == 2));
    assert!(out.report.best_post_pool_acc >= out.report.baseline_val_acc);
}

#[test]
fn trials_are_deterministic() {
    let cfg = tiny();
    let a = run_trial(&cfg, &data(&cfg)).unwrap();
    let b = run_trial(&cfg, &data(&cfg)).unwrap();
    assert_eq!(a.report, b.report);
    assert_eq!(a.codebook, b.codebook);
    let other = TrainConfig { seed: 1, ..cfg.clone() };
    let c = run_trial(&other, &data(&other)).unwrap();
    assert_ne!(a.codebook, c.codebook);
}

#[test]
fn no_phase_one_examples_leaves_initial_classifier() {
    let cfg = TrainConfig { phase1_examples: 0, phase2_examples: 100, ..tiny() };
    let out = run_trial(&cfg, &data(&cfg)).unwrap();
    let init = ClassifierState::random(cfg.p * cfg.k, cfg.hidden, cfg.t, Activation::Sigmoid, &mut {
        let mut rng = seeded_rng(cfg.seed);
        rng.set_stream(2);
        rng
    });
    assert_eq!(out.classifier, init);
    assert_eq!(out.report.history[0].examples_seen, 0);
}

#[test]
fn phase_two_rejects_unfrozen_stats() {
    let cfg = tiny();
    let samples = data(&cfg);
    let d = split(&samples, cfg.train_fraction, cfg.seed).unwrap();
    let (cb, _) = learn_codebook(&d.train, cfg.codebook_params(), 3).unwrap();
    let maps = init_quadrant_maps(cfg.grid_side().unwrap()).unwrap();
    let p1 = run_phase1(&cfg, &d, &cb, &maps).unwrap();
    let loose = NormStats::new(p1.stats.mu().to_vec(), p1.stats.sigma().to_vec()).unwrap();
    let err = run_phase2(&cfg, &d, &cb, &p1.classifier, &loose, &maps).unwrap_err();
    assert!(matches!(err, Error::State(_)));
}

fn setup(n: usize, samples: &[ImageSample]) -> (learnpool_core::Codebook, learnpool_core::PoolMapSet, PatchParams) {
    let params = PatchParams { w: 3, stride: 1, eps_norm: 10.0 };
    let cp = CodebookParams { patch: params, k: 4, eps_zca: 0.1, iters: 10, sample_patches: 500 };
    let (cb, _) = learn_codebook(samples, cp, 9).unwrap();
    (cb, init_quadrant_maps(n - 2).unwrap(), params)
}

fn frozen_unit_stats(len: usize) -> NormStats {
    let mut s = NormStats::new(vec![0.0; len], vec![1.0; len]).unwrap();
    s.freeze();
    s
}

#[test]
fn evaluate_edge_cases() {
    let samples = generate_synthetic(40, 8, 4).unwrap();
    let (cb, maps, params) = setup(8, &samples);
    let stats = frozen_unit_stats(16);
    let mut net = ClassifierState::zeros(16, 3, 2, Activation::Sigmoid);
    assert!(evaluate(&net, &cb, &maps, &stats, &[], params).is_err());

    // Constant outputs: accuracy is the frequency of the favored class, ties to class 0.
    let ones = samples.iter().filter(|s| s.label() == 1).count() as f64 / samples.len() as f64;
    let acc = evaluate(&net, &cb, &maps, &stats, &samples, params).unwrap();
    assert_eq!(acc, 1.0 - ones);
    net.b2 = vec![0.0, 1.0];
    let acc = evaluate(&net, &cb, &maps, &stats, &samples, params).unwrap();
    assert_eq!(acc, ones);
}

#[test]
fn random_labels_score_near_chance() {
    let mut rng = seeded_rng(31);
    let n = 6;
    let samples: Vec<ImageSample> = (0..1000)
        .map(|_| {
            let px = (0..CHANNELS * n * n).map(|_| rng.random_range(0.0..255.0)).collect();
            ImageSample::new(n, px, rng.random_range(0..10), 10).unwrap()
        })
        .collect();
    let (cb, maps, params) = setup(n, &samples);
    let pooled: Vec<Vec<f64>> = samples[..50]
        .iter()
        .map(|s| {
            let g = learnpool_core::codebook::encode_image(&cb, s, params).unwrap();
            learnpool_core::pooling::pool_forward(&maps, &g).unwrap()
        })
        .collect();
    let stats = fit_norm_stats(&pooled, 1e-8).unwrap();
    let net = ClassifierState::random(16, 8, 10, Activation::Sigmoid, &mut rng);
    let acc = evaluate(&net, &cb, &maps, &stats, &samples, params).unwrap();
    assert!((acc - 0.1).abs() <= 0.05, "{acc}");
}

#[test]
fn synthetic_classes_separate_by_quadrant_variance() {
    for n in [6, 8, 16, 32] {
        let samples = generate_synthetic(200, n, n as u64).unwrap();
        for s in &samples {
            let v = quadrant_variances(s);
            let best = (0..4).fold(0, |b, i| if v[i] > v[b] { i } else { b });
            let predicted = if best == 0 {
                0
            } else if best == 3 {
                1
            } else {
                usize::MAX
            };
            assert_eq!(predicted, s.label(), "n={n}: {v:?}");
        }
    }
}
