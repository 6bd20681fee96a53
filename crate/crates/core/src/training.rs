//! Two-phase alternating schedule.
//!
//! Phase 1 trains the classifier by mini-batch SGD while the pooling maps sit
//! at their quadrant initialization; normalization statistics are fitted and
//! frozen before the first classifier update. Phase 2 freezes the classifier
//! and the statistics and trains the maps, checking validation accuracy at a
//! fixed interval and keeping the best maps seen.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use rand::SeedableRng;

use crate::classifier::{argmax, one_hot, Activation, ClassifierState};
use crate::codebook::{encode_image, learn_codebook, Codebook, CodebookParams, EncodedGrid, PatchParams};
use crate::dataset::{split, DatasetSplit, ImageSample};
use crate::pooling::{
    apply_norm, fit_norm_stats, init_quadrant_maps, pool_forward, pool_update, NormStats, PoolMapSet,
};
use crate::preprocess::grid_side;
use crate::{par, Error, Result, Rng};

/// Every tunable of the pipeline and the training protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub k: usize,
    pub w: usize,
    pub stride: usize,
    pub n: usize,
    pub p: usize,
    pub hidden: usize,
    pub t: usize,
    pub batch_size: usize,
    pub eta_pool: f64,
    pub eta_net: f64,
    pub phase1_examples: usize,
    pub phase2_examples: usize,
    pub val_check_interval: usize,
    pub trials: usize,
    pub seed: u64,
    pub eps_norm: f64,
    pub eps_zca: f64,
    pub sigma_floor: f64,
    pub kmeans_iters: usize,
    pub codebook_patches: usize,
    pub activation: Activation,
    pub train_fraction: f64,
    /// Train on generated two-class data instead of CIFAR-10 files.
    pub synthetic: bool,
    pub synthetic_count: usize,
    /// Upper bound on encoded grids kept in memory (images).
    pub cache_images: usize,
    /// Training images pooled to fit the normalization statistics; 0 = all.
    pub norm_fit_images: usize,
}

impl TrainConfig {
    /// Full-scale CIFAR-10 protocol.
    pub fn full_scale() -> Self {
        Self {
            k: 400,
            w: 6,
            stride: 1,
            n: 32,
            p: 4,
            hidden: 128,
            t: 10,
            batch_size: 10,
            eta_pool: 5e-5,
            eta_net: 1e-2,
            phase1_examples: 250_000,
            phase2_examples: 15_000,
            val_check_interval: 500,
            trials: 5,
            seed: 0,
            eps_norm: 10.0,
            eps_zca: 0.1,
            sigma_floor: 1e-8,
            kmeans_iters: 25,
            codebook_patches: 100_000,
            activation: Activation::Sigmoid,
            train_fraction: 0.8,
            synthetic: false,
            synthetic_count: 400,
            cache_images: 0,
            norm_fit_images: 0,
        }
    }

    /// Small synthetic configuration that runs in seconds.
    pub fn desk() -> Self {
        Self {
            k: 16,
            w: 4,
            n: 16,
            hidden: 16,
            t: 2,
            phase1_examples: 4000,
            phase2_examples: 1500,
            val_check_interval: 250,
            trials: 1,
            codebook_patches: 5000,
            synthetic: true,
            synthetic_count: 400,
            cache_images: usize::MAX,
            ..Self::full_scale()
        }
    }

    pub fn patch_params(&self) -> PatchParams {
        PatchParams { w: self.w, stride: self.stride, eps_norm: self.eps_norm }
    }

    pub fn codebook_params(&self) -> CodebookParams {
        CodebookParams {
            patch: self.patch_params(),
            k: self.k,
            eps_zca: self.eps_zca,
            iters: self.kmeans_iters,
            sample_patches: self.codebook_patches,
        }
    }

    /// Side `P` of the encoded grid.
    pub fn grid_side(&self) -> Result<usize> {
        grid_side(self.n, self.w, self.stride)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Argument(m));
        if self.p != 4 {
            return fail(format!("p = {} unsupported: maps are initialized from the four quadrants", self.p));
        }
        if self.k < 1 || self.hidden < 1 || self.t < 2 {
            return fail(String::from("k and hidden must be >= 1 and t >= 2"));
        }
        if self.batch_size == 0 || self.val_check_interval == 0 || self.trials == 0 {
            return fail(String::from("batch_size, val_check_interval and trials must be >= 1"));
        }
        if !(self.eta_pool >= 0.0 && self.eta_net >= 0.0) {
            return fail(String::from("learning rates must be >= 0"));
        }
        if self.sigma_floor.is_nan() || self.sigma_floor <= 0.0 || self.eps_norm < 0.0 || self.eps_zca < 0.0 {
            return fail(String::from("sigma_floor must be > 0 and eps_norm, eps_zca >= 0"));
        }
        if self.kmeans_iters == 0 || self.codebook_patches < self.k.max(2) {
            return fail(format!("kmeans_iters must be >= 1 and codebook_patches >= k ({})", self.k));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return fail(format!("train_fraction {} not in (0, 1)", self.train_fraction));
        }
        if self.synthetic && self.t < 2 {
            return fail(String::from("synthetic data has two classes; t must be >= 2"));
        }
        let side = self.grid_side()?;
        if side < 2 {
            return fail(format!("grid side {side} too small for quadrant pooling"));
        }
        Ok(())
    }
}

/// Sizes of the consecutive mini-batches that present `total` examples.
pub fn batch_sizes(total: usize, batch: usize) -> impl Iterator<Item = usize> {
    let full = total / batch;
    let rest = total % batch;
    core::iter::repeat_n(batch, full).chain((rest > 0).then_some(rest))
}

/// Whether a validation check falls due when phase-2 progress moves from
/// `before` to `after` examples.
pub fn check_due(before: usize, after: usize, interval: usize) -> bool {
    after / interval > before / interval
}

/// Batch/check counts of a configured run, computed with the same helpers the
/// trainer uses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolPlan {
    pub phase1_batches: usize,
    pub phase1_examples: usize,
    pub phase2_batches: usize,
    pub phase2_examples: usize,
    /// Cumulative examples seen when phase 2 begins.
    pub phase_boundary: usize,
    /// Cumulative `examples_seen` of every periodic phase-2 check.
    pub check_points: Vec<usize>,
    /// Periodic checks plus the one at the start of phase 2.
    pub validation_checks: usize,
}

pub fn plan_protocol(config: &TrainConfig) -> ProtocolPlan {
    let mut phase1_batches = 0;
    let mut phase1_examples = 0;
    for b in batch_sizes(config.phase1_examples, config.batch_size) {
        phase1_batches += 1;
        phase1_examples += b;
    }
    let mut phase2_batches = 0;
    let mut seen = 0;
    let mut check_points = Vec::new();
    for b in batch_sizes(config.phase2_examples, config.batch_size) {
        phase2_batches += 1;
        let before = seen;
        seen += b;
        if check_due(before, seen, config.val_check_interval) {
            check_points.push(phase1_examples + seen);
        }
    }
    ProtocolPlan {
        phase1_batches,
        phase1_examples,
        phase2_batches,
        phase2_examples: seen,
        phase_boundary: phase1_examples,
        validation_checks: check_points.len() + 1,
        check_points,
    }
}

/// One metrics row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistoryRow {
    /// Cumulative over both phases.
    pub examples_seen: usize,
    pub phase: u8,
    /// Mean MSE loss on the validation set at this check.
    pub loss: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub baseline_val_acc: f64,
    pub best_post_pool_acc: f64,
    pub history: Vec<HistoryRow>,
    pub best_maps: PoolMapSet,
    pub final_maps: PoolMapSet,
    /// Checksums of the frozen classifier and statistics, before and after
    /// phase 2.
    pub classifier_checksum: (u64, u64),
    pub stats_checksum: (u64, u64),
}

/// RNG stream for one stage of one trial.
fn stage_rng(seed: u64, stage: u64) -> Rng {
    let mut rng = Rng::seed_from_u64(seed);
    rng.set_stream(stage);
    rng
}

const STREAM_CODEBOOK: u64 = 1;
const STREAM_CLASSIFIER_INIT: u64 = 2;
const STREAM_PHASE1: u64 = 3;
const STREAM_PHASE2: u64 = 4;

/// Encoded grids for one image list, kept up to a fixed number of images.
pub struct GridStore<'a> {
    images: &'a [ImageSample],
    codebook: &'a Codebook,
    params: PatchParams,
    cache: Vec<Option<Arc<EncodedGrid>>>,
    capacity: usize,
    cached: usize,
}

impl<'a> GridStore<'a> {
    pub fn new(images: &'a [ImageSample], codebook: &'a Codebook, params: PatchParams, capacity: usize) -> Self {
        Self { images, codebook, params, cache: vec![None; images.len()], capacity, cached: 0 }
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// Grids for `indices`, encoding (in parallel) whatever is not cached.
    /// Newly encoded grids are cached in index order until the store is full.
    pub fn grids(&mut self, indices: &[usize]) -> Result<Vec<Arc<EncodedGrid>>> {
        let missing: Vec<usize> = indices.iter().copied().filter(|&i| self.cache[i].is_none()).collect();
        let (images, cb, params) = (self.images, self.codebook, self.params);
        let fresh = par::map_indexed(missing.len(), |j| encode_image(cb, &images[missing[j]], params));
        let mut fresh_map: Vec<(usize, Arc<EncodedGrid>)> = Vec::with_capacity(missing.len());
        for (i, g) in missing.into_iter().zip(fresh) {
            let g = Arc::new(g?);
            if self.cache[i].is_none() && self.cached < self.capacity {
                self.cache[i] = Some(g.clone());
                self.cached += 1;
            }
            fresh_map.push((i, g));
        }
        Ok(indices
            .iter()
            .map(|&i| match &self.cache[i] {
                Some(g) => g.clone(),
                None => fresh_map.iter().find(|(j, _)| *j == i).map(|(_, g)| g.clone()).unwrap(),
            })
            .collect())
    }
}

/// Accuracy and mean loss over pooled (unnormalized) vectors.
fn score_pooled(
    classifier: &ClassifierState,
    stats: &NormStats,
    pooled: &[Vec<f64>],
    labels: &[usize],
) -> Result<(f64, f64)> {
    let outcomes = par::map_indexed(pooled.len(), |i| -> Result<(bool, f64)> {
        let h_bar = apply_norm(stats, &pooled[i])?;
        let out = classifier.forward(&h_bar)?;
        let target = one_hot(labels[i], classifier.outputs);
        let loss = 0.5 * out.iter().zip(&target).map(|(y, t)| (y - t) * (y - t)).sum::<f64>();
        Ok((argmax(&out) == labels[i], loss))
    });
    let mut correct = 0usize;
    let mut loss = 0.0;
    for o in outcomes {
        let (hit, l) = o?;
        correct += usize::from(hit);
        loss += l;
    }
    let count = pooled.len() as f64;
    Ok((correct as f64 / count, loss / count))
}

fn pool_store(store: &mut GridStore<'_>, maps: &PoolMapSet, chunk: usize) -> Result<Vec<Vec<f64>>> {
    let mut pooled = Vec::with_capacity(store.len());
    let all: Vec<usize> = (0..store.len()).collect();
    for idx in all.chunks(chunk.max(1)) {
        for g in store.grids(idx)? {
            pooled.push(pool_forward(maps, &g)?);
        }
    }
    Ok(pooled)
}

const EVAL_CHUNK: usize = 256;

/// Fraction of `samples` whose argmax output equals the label (ties go to
/// the lowest class index).
pub fn evaluate(
    classifier: &ClassifierState,
    codebook: &Codebook,
    maps: &PoolMapSet,
    stats: &NormStats,
    samples: &[ImageSample],
    params: PatchParams,
) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::argument("cannot evaluate on an empty sample list"));
    }
    let mut store = GridStore::new(samples, codebook, params, 0);
    let pooled = pool_store(&mut store, maps, EVAL_CHUNK)?;
    let labels: Vec<usize> = samples.iter().map(ImageSample::label).collect();
    Ok(score_pooled(classifier, stats, &pooled, &labels)?.0)
}

/// What phase 1 hands to phase 2.
#[derive(Debug, Clone, PartialEq)]
pub struct Phase1Outcome {
    pub classifier: ClassifierState,
    pub stats: NormStats,
    pub baseline_val_acc: f64,
    pub history: Vec<HistoryRow>,
}

/// Pooled features of every training image under fixed maps, cached for the
/// whole phase.
fn pooled_all(
    images: &[ImageSample],
    codebook: &Codebook,
    maps: &PoolMapSet,
    params: PatchParams,
) -> Result<Vec<Vec<f64>>> {
    let mut store = GridStore::new(images, codebook, params, 0);
    pool_store(&mut store, maps, EVAL_CHUNK)
}

pub fn run_phase1(
    config: &TrainConfig,
    data: &DatasetSplit,
    codebook: &Codebook,
    maps: &PoolMapSet,
) -> Result<Phase1Outcome> {
    config.validate()?;
    if data.train.is_empty() || data.validation.is_empty() {
        return Err(Error::argument("train and validation sets must be non-empty"));
    }
    let params = config.patch_params();
    let train_pooled = pooled_all(&data.train, codebook, maps, params)?;
    let val_pooled = pooled_all(&data.validation, codebook, maps, params)?;

    let fit_count = match config.norm_fit_images {
        0 => train_pooled.len(),
        c => c.min(train_pooled.len()),
    };
    let stats = fit_norm_stats(&train_pooled[..fit_count], config.sigma_floor)?;
    let train_bar: Vec<Vec<f64>> = train_pooled.iter().map(|h| apply_norm(&stats, h)).collect::<Result<_>>()?;
    drop(train_pooled);

    let inputs = config.p * codebook.k();
    let mut classifier = ClassifierState::random(
        inputs,
        config.hidden,
        config.t,
        config.activation,
        &mut stage_rng(config.seed, STREAM_CLASSIFIER_INIT),
    );
    let targets: Vec<Vec<f64>> = (0..config.t).map(|c| one_hot(c, config.t)).collect();
    let mut rng = stage_rng(config.seed, STREAM_PHASE1);
    for size in batch_sizes(config.phase1_examples, config.batch_size) {
        let picks: Vec<usize> = (0..size).map(|_| rng.random_range(0..train_bar.len())).collect();
        let batch: Vec<(&[f64], &[f64])> =
            picks.iter().map(|&i| (train_bar[i].as_slice(), targets[data.train[i].label()].as_slice())).collect();
        classifier.sgd_step(&batch, config.eta_net)?;
    }

    let labels: Vec<usize> = data.validation.iter().map(ImageSample::label).collect();
    let (acc, loss) = score_pooled(&classifier, &stats, &val_pooled, &labels)?;
    let history = vec![HistoryRow { examples_seen: config.phase1_examples, phase: 1, loss, val_acc: acc }];
    Ok(Phase1Outcome { classifier, stats, baseline_val_acc: acc, history })
}

pub fn run_phase2(
    config: &TrainConfig,
    data: &DatasetSplit,
    codebook: &Codebook,
    classifier: &ClassifierState,
    stats: &NormStats,
    maps: &PoolMapSet,
) -> Result<TrainReport> {
    config.validate()?;
    if !stats.is_frozen() {
        return Err(Error::state("phase 2 requires frozen normalization statistics"));
    }
    if data.train.is_empty() || data.validation.is_empty() {
        return Err(Error::argument("train and validation sets must be non-empty"));
    }
    let classifier_before = classifier.checksum();
    let stats_before = stats.checksum();
    let params = config.patch_params();

    let val_capacity = config.cache_images.min(data.validation.len());
    let mut val_store = GridStore::new(&data.validation, codebook, params, val_capacity);
    let mut train_store = GridStore::new(&data.train, codebook, params, config.cache_images - val_capacity);
    let labels: Vec<usize> = data.validation.iter().map(ImageSample::label).collect();
    let mut validate = |maps: &PoolMapSet| -> Result<(f64, f64)> {
        let pooled = pool_store(&mut val_store, maps, EVAL_CHUNK)?;
        score_pooled(classifier, stats, &pooled, &labels)
    };

    let mut maps = maps.clone();
    let (start_acc, _) = validate(&maps)?;
    let mut best_acc = start_acc;
    let mut best_maps = maps.clone();
    let mut history = Vec::new();
    let targets: Vec<Vec<f64>> = (0..config.t).map(|c| one_hot(c, config.t)).collect();
    let mut rng = stage_rng(config.seed, STREAM_PHASE2);
    let mut seen = 0usize;
    for size in batch_sizes(config.phase2_examples, config.batch_size) {
        let picks: Vec<usize> = (0..size).map(|_| rng.random_range(0..data.train.len())).collect();
        let grids = train_store.grids(&picks)?;
        let snapshot = &maps;
        let deltas = par::map_indexed(picks.len(), |j| -> Result<Vec<f64>> {
            let h = pool_forward(snapshot, &grids[j])?;
            let h_bar = apply_norm(stats, &h)?;
            Ok(classifier.backward(&h_bar, &targets[data.train[picks[j]].label()])?.delta0)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let batch: Vec<(&EncodedGrid, &[f64])> =
            grids.iter().map(|g| g.as_ref()).zip(deltas.iter().map(Vec::as_slice)).collect();
        pool_update(&mut maps, &batch, stats, config.eta_pool)?;

        let before = seen;
        seen += size;
        if check_due(before, seen, config.val_check_interval) {
            let (acc, loss) = validate(&maps)?;
            history.push(HistoryRow { examples_seen: config.phase1_examples + seen, phase: 2, loss, val_acc: acc });
            if acc > best_acc {
                best_acc = acc;
                best_maps = maps.clone();
            }
        }
    }

    Ok(TrainReport {
        baseline_val_acc: start_acc,
        best_post_pool_acc: best_acc,
        history,
        best_maps,
        final_maps: maps,
        classifier_checksum: (classifier_before, classifier.checksum()),
        stats_checksum: (stats_before, stats.checksum()),
    })
}

/// Everything one trial produces.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub seed: u64,
    pub codebook: Codebook,
    pub kmeans_objective: Vec<f64>,
    pub initial_maps: PoolMapSet,
    pub classifier: ClassifierState,
    pub stats: NormStats,
    /// Phase-1 accuracy at hand-off.
    pub phase1_val_acc: f64,
    /// Phase-1 and phase-2 rows, in order.
    pub report: TrainReport,
}

/// Split, codebook, phase 1 and phase 2 under `config.seed`.
pub fn run_trial(config: &TrainConfig, samples: &[ImageSample]) -> Result<TrialOutcome> {
    config.validate()?;
    if let Some(bad) = samples.iter().find(|s| s.side() != config.n) {
        return Err(Error::argument(format!("image side {} does not match configured n = {}", bad.side(), config.n)));
    }
    let data = split(samples, config.train_fraction, config.seed)?;
    if data.train.is_empty() || data.validation.is_empty() {
        return Err(Error::argument("split left the train or validation set empty"));
    }
    let codebook_seed = stage_rng(config.seed, STREAM_CODEBOOK).random();
    let (codebook, km) = learn_codebook(&data.train, config.codebook_params(), codebook_seed)?;
    let maps = init_quadrant_maps(config.grid_side()?)?;
    let phase1 = run_phase1(config, &data, &codebook, &maps)?;
    let mut report = run_phase2(config, &data, &codebook, &phase1.classifier, &phase1.stats, &maps)?;
    let mut history = phase1.history.clone();
    history.append(&mut report.history);
    report.history = history;
    Ok(TrialOutcome {
        seed: config.seed,
        codebook,
        kmeans_objective: km.objective,
        initial_maps: maps,
        classifier: phase1.classifier,
        stats: phase1.stats,
        phase1_val_acc: phase1.baseline_val_acc,
        report,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialSummary {
    pub seed: u64,
    pub baseline_val_acc: f64,
    pub best_post_pool_acc: f64,
}

impl TrialSummary {
    pub fn delta(&self) -> f64 {
        self.best_post_pool_acc - self.baseline_val_acc
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateReport {
    pub trials: Vec<TrialSummary>,
    pub mean_baseline: f64,
    pub std_baseline: f64,
    pub mean_best: f64,
    pub std_best: f64,
    /// Mean of per-trial improvements.
    pub mean_delta: f64,
    /// `mean_best − mean_baseline`.
    pub delta_of_means: f64,
}

/// Mean and sample standard deviation, summed in sorted order so the result
/// does not depend on trial order.
fn mean_std(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let mut dev: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
    dev.sort_by(f64::total_cmp);
    (mean, libm::sqrt(dev.iter().sum::<f64>() / (n - 1.0)))
}

pub fn aggregate(trials: &[TrialSummary]) -> Result<AggregateReport> {
    if trials.is_empty() {
        return Err(Error::argument("no trials to aggregate"));
    }
    let (mean_baseline, std_baseline) = mean_std(trials.iter().map(|t| t.baseline_val_acc));
    let (mean_best, std_best) = mean_std(trials.iter().map(|t| t.best_post_pool_acc));
    let (mean_delta, _) = mean_std(trials.iter().map(TrialSummary::delta));
    Ok(AggregateReport {
        trials: trials.to_vec(),
        mean_baseline,
        std_baseline,
        mean_best,
        std_best,
        mean_delta,
        delta_of_means: mean_best - mean_baseline,
    })
}

/// Runs `config.trials` trials; trial `r` uses seed `config.seed + r`.
pub fn run_trials(config: &TrainConfig, samples: &[ImageSample]) -> Result<(Vec<TrialOutcome>, AggregateReport)> {
    config.validate()?;
    let mut outcomes = Vec::with_capacity(config.trials);
    for r in 0..config.trials {
        let trial = TrainConfig { seed: config.seed.wrapping_add(r as u64), ..config.clone() };
        outcomes.push(run_trial(&trial, samples)?);
    }
    let summaries: Vec<TrialSummary> = outcomes
        .iter()
        .map(|o| TrialSummary {
            seed: o.seed,
            baseline_val_acc: o.report.baseline_val_acc,
            best_post_pool_acc: o.report.best_post_pool_acc,
        })
        .collect();
    let agg = aggregate(&summaries)?;
    Ok((outcomes, agg))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_scale_defaults() {
        let c = TrainConfig::full_scale();
        assert_eq!((c.k, c.w, c.stride, c.p, c.hidden, c.t, c.batch_size), (400, 6, 1, 4, 128, 10, 10));
        assert_eq!((c.phase1_examples, c.phase2_examples, c.val_check_interval, c.trials), (250_000, 15_000, 500, 5));
        assert_eq!(c.eta_pool, 5e-5);
        assert_eq!(c.grid_side().unwrap(), 27);
        c.validate().unwrap();
        TrainConfig::desk().validate().unwrap();
    }

    #[test]
    fn batch_sizes_cover_total() {
        assert_eq!(batch_sizes(25, 10).collect::<Vec<_>>(), vec![10, 10, 5]);
        assert_eq!(batch_sizes(0, 10).count(), 0);
        assert_eq!(batch_sizes(250_000, 10).count(), 25_000);
    }

    #[test]
    fn full_scale_plan() {
        let plan = plan_protocol(&TrainConfig::full_scale());
        assert_eq!(plan.phase1_batches, 25_000);
        assert_eq!(plan.phase2_batches, 1_500);
        assert_eq!(plan.check_points.len(), 30);
        assert_eq!(plan.check_points[0], 250_500);
        assert_eq!(*plan.check_points.last().unwrap(), 265_000);
        assert_eq!(plan.validation_checks, 31);
    }

    #[test]
    fn aggregate_is_order_free() {
        let t = |s, b, x| TrialSummary { seed: s, baseline_val_acc: b, best_post_pool_acc: x };
        let a = [t(0, 0.61, 0.63), t(1, 0.7, 0.7), t(2, 0.655, 0.69)];
        let r1 = aggregate(&a).unwrap();
        let r2 = aggregate(&[a[2], a[0], a[1]]).unwrap();
        assert_eq!(r1.mean_baseline, r2.mean_baseline);
        assert_eq!(r1.std_best, r2.std_best);
        assert_eq!(r1.mean_delta, r2.mean_delta);
        let one = aggregate(&a[..1]).unwrap();
        assert_eq!((one.mean_baseline, one.mean_best, one.std_baseline), (0.61, 0.63, 0.0));
    }

    #[test]
    fn check_due_crossings() {
        assert!(!check_due(0, 10, 500));
        assert!(check_due(490, 500, 500));
        assert!(check_due(495, 505, 500));
        assert!(!check_due(500, 510, 500));
    }
}
