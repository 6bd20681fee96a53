//! Independent oracles: central finite differences through
//! pool → normalize → classifier → loss, a brute-force pooling loop, and a
//! direct quadrant-mean check.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::classifier::{one_hot, Activation, ClassifierState};
use crate::codebook::EncodedGrid;
use crate::dd::Dd;
use crate::pooling::{
    apply_norm, fit_norm_stats, init_quadrant_maps, pool_forward, pool_update, quadrant_ranges, NormStats, PoolMapSet,
};
use crate::{Error, Result, Rng};

/// `|a − b| / max(|a|, |b|, 1e-12)`.
pub fn rel_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-12)
}

/// Loss of the full forward path for one image.
pub fn pipeline_loss(
    maps: &PoolMapSet,
    g: &EncodedGrid,
    stats: &NormStats,
    classifier: &ClassifierState,
    target: &[f64],
) -> Result<f64> {
    let h = pool_forward(maps, g)?;
    let h_bar = apply_norm(stats, &h)?;
    classifier.loss(&h_bar, target)
}

/// `∂J/∂W^i[m,n]` by central differences, laid out like the maps.
///
/// Losses are evaluated in double-double arithmetic at exactly `W ± step`.
pub fn fd_pool_gradient(
    maps: &PoolMapSet,
    g: &EncodedGrid,
    stats: &NormStats,
    classifier: &ClassifierState,
    target: &[f64],
    step: f64,
) -> Result<Vec<f64>> {
    let net = DdNet::new(classifier, target)?;
    if stats.len() != maps.pools() * g.k() || !stats.is_frozen() {
        return Err(Error::argument("stats do not match the pooled vector or are not frozen"));
    }
    if maps.side() != g.side() {
        return Err(Error::argument("map and grid sides differ"));
    }
    let mut w: Vec<Dd> = maps.weights().iter().map(|&v| Dd::from(v)).collect();
    let loss = |w: &[Dd]| {
        let h = dd_pool(w, maps.pools(), g);
        let h_bar: Vec<Dd> = h
            .iter()
            .zip(stats.mu().iter().zip(stats.sigma()))
            .map(|(&v, (&m, &s))| (v - Dd::from(m)) / Dd::from(s))
            .collect();
        net.loss(&h_bar)
    };
    let mut grad = vec![0.0; w.len()];
    for (idx, out) in grad.iter_mut().enumerate() {
        let orig = w[idx];
        w[idx] = orig + Dd::from(step);
        let plus = loss(&w);
        w[idx] = orig - Dd::from(step);
        let minus = loss(&w);
        w[idx] = orig;
        *out = ((plus - minus) / Dd::from(2.0 * step)).to_f64();
    }
    Ok(grad)
}

fn dd_pool(w: &[Dd], pools: usize, g: &EncodedGrid) -> Vec<Dd> {
    let (side, k) = (g.side(), g.k());
    let mut h = vec![Dd::ZERO; pools * k];
    for i in 0..pools {
        for c in 0..k {
            let mut acc = Dd::ZERO;
            for m in 0..side {
                for n in 0..side {
                    acc = acc + w[(i * side + m) * side + n] * Dd::from(g.at(m, n, c));
                }
            }
            h[i * k + c] = acc;
        }
    }
    h
}

/// Double-double copy of a classifier, for loss evaluation only.
struct DdNet {
    blocks: [Vec<Dd>; 4],
    inputs: usize,
    hidden: usize,
    outputs: usize,
    activation: Activation,
    target: Vec<f64>,
}

impl DdNet {
    fn new(c: &ClassifierState, target: &[f64]) -> Result<Self> {
        c.check()?;
        if target.len() != c.outputs {
            return Err(Error::argument("target length differs from output count"));
        }
        let conv = |v: &[f64]| v.iter().map(|&x| Dd::from(x)).collect::<Vec<_>>();
        Ok(Self {
            blocks: [conv(&c.v1), conv(&c.b1), conv(&c.v2), conv(&c.b2)],
            inputs: c.inputs,
            hidden: c.hidden,
            outputs: c.outputs,
            activation: c.activation,
            target: target.to_vec(),
        })
    }

    fn loss(&self, h_bar: &[Dd]) -> Dd {
        let [v1, b1, v2, b2] = &self.blocks;
        let hidden: Vec<Dd> = (0..self.hidden)
            .map(|j| {
                let mut a = b1[j];
                for (w, x) in v1[j * self.inputs..(j + 1) * self.inputs].iter().zip(h_bar) {
                    a = a + *w * *x;
                }
                match self.activation {
                    Activation::Sigmoid => a.sigmoid(),
                    Activation::Tanh => a.tanh(),
                }
            })
            .collect();
        let mut total = Dd::ZERO;
        for o in 0..self.outputs {
            let mut y = b2[o];
            for (w, x) in v2[o * self.hidden..(o + 1) * self.hidden].iter().zip(&hidden) {
                y = y + *w * *x;
            }
            let d = y - Dd::from(self.target[o]);
            total = total + d * d;
        }
        total * Dd::from(0.5)
    }
}

/// Quadruple loop over (pool, channel, row, column).
pub fn brute_pool(maps: &PoolMapSet, g: &EncodedGrid) -> Vec<f64> {
    let k = g.k();
    let side = g.side();
    let mut h = vec![0.0; maps.pools() * k];
    for i in 0..maps.pools() {
        for c in 0..k {
            let mut acc = 0.0;
            for m in 0..side {
                for n in 0..side {
                    acc += maps.weight(i, m, n) * g.at(m, n, c);
                }
            }
            h[i * k + c] = acc;
        }
    }
    h
}

/// Per-quadrant channel means computed directly from the grid.
pub fn quadrant_means(g: &EncodedGrid) -> Vec<f64> {
    let k = g.k();
    let mut out = vec![0.0; 4 * k];
    for (i, (rows, cols)) in quadrant_ranges(g.side()).into_iter().enumerate() {
        let area = (rows.len() * cols.len()) as f64;
        for c in 0..k {
            let mut sum = 0.0;
            for m in rows.clone() {
                for n in cols.clone() {
                    sum += g.at(m, n, c);
                }
            }
            out[i * k + c] = sum / area;
        }
    }
    out
}

/// Whether quadrant-initialized weighted pooling reproduces quadrant means
/// within 1e-12.
pub fn check_quadrant_equivalence(side: usize, g: &EncodedGrid) -> Result<bool> {
    let maps = init_quadrant_maps(side)?;
    let pooled = pool_forward(&maps, g)?;
    Ok(pooled.iter().zip(quadrant_means(g)).all(|(a, b)| (a - b).abs() <= 1e-12))
}

/// Central-difference gradients of the classifier loss: the four parameter
/// blocks and `∂J/∂h̄`, evaluated in double-double arithmetic.
pub fn fd_classifier_gradients(
    classifier: &ClassifierState,
    h_bar: &[f64],
    target: &[f64],
    step: f64,
) -> Result<[Vec<f64>; 5]> {
    let mut net = DdNet::new(classifier, target)?;
    if h_bar.len() != net.inputs {
        return Err(Error::argument("input length differs from classifier inputs"));
    }
    let mut x: Vec<Dd> = h_bar.iter().map(|&v| Dd::from(v)).collect();
    let step_dd = Dd::from(step);
    let two_step = Dd::from(2.0 * step);
    let mut blocks: [Vec<f64>; 5] = Default::default();
    for (b, out) in blocks.iter_mut().take(4).enumerate() {
        for idx in 0..net.blocks[b].len() {
            let orig = net.blocks[b][idx];
            net.blocks[b][idx] = orig + step_dd;
            let plus = net.loss(&x);
            net.blocks[b][idx] = orig - step_dd;
            let minus = net.loss(&x);
            net.blocks[b][idx] = orig;
            out.push(((plus - minus) / two_step).to_f64());
        }
    }
    for idx in 0..x.len() {
        let orig = x[idx];
        x[idx] = orig + step_dd;
        let plus = net.loss(&x);
        x[idx] = orig - step_dd;
        let minus = net.loss(&x);
        x[idx] = orig;
        blocks[4].push(((plus - minus) / two_step).to_f64());
    }
    Ok(blocks)
}

/// Names of the blocks in a [`GradCheckReport`], in order.
pub const BLOCKS: [&str; 6] = ["v1", "b1", "v2", "b2", "delta0", "W"];

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// Block name of the worst coordinate.
    pub worst_block: &'static str,
    /// `(pool, m, n)` of the worst pool-weight coordinate.
    pub worst_coordinate: (usize, usize, usize),
    /// Largest relative error per entry of [`BLOCKS`].
    pub block_errors: [f64; 6],
    pub instances: usize,
}

impl GradCheckReport {
    fn empty() -> Self {
        Self {
            max_rel_error: 0.0,
            worst_block: BLOCKS[0],
            worst_coordinate: (0, 0, 0),
            block_errors: [0.0; 6],
            instances: 0,
        }
    }

    fn record(&mut self, block: usize, err: f64) {
        self.block_errors[block] = self.block_errors[block].max(err);
        if err > self.max_rel_error {
            self.max_rel_error = err;
            self.worst_block = BLOCKS[block];
        }
    }

    pub fn merge(&mut self, other: &GradCheckReport) {
        for b in 0..BLOCKS.len() {
            self.block_errors[b] = self.block_errors[b].max(other.block_errors[b]);
        }
        if other.max_rel_error > self.max_rel_error {
            self.max_rel_error = other.max_rel_error;
            self.worst_block = other.worst_block;
            self.worst_coordinate = other.worst_coordinate;
        }
        self.instances += other.instances;
    }

    pub fn passed(&self, threshold: f64) -> bool {
        self.max_rel_error <= threshold
    }
}

/// Size of a random gradient-check instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InstanceDims {
    pub side: usize,
    pub k: usize,
    pub pools: usize,
    pub hidden: usize,
    pub classes: usize,
}

/// A random pipeline slice: grid, maps, frozen stats, classifier and target.
#[derive(Debug, Clone)]
pub struct GradInstance {
    pub grid: EncodedGrid,
    pub maps: PoolMapSet,
    pub stats: NormStats,
    pub classifier: ClassifierState,
    pub target: Vec<f64>,
}

impl GradInstance {
    pub fn random(dims: InstanceDims, rng: &mut Rng) -> Result<Self> {
        let InstanceDims { side, k, pools, hidden, classes } = dims;
        let random_grid = |rng: &mut Rng| {
            let v = (0..side * side * k).map(|_| rng.random_range(0.0..1.0)).collect();
            EncodedGrid::new(side, k, v)
        };
        let grid = random_grid(rng)?;
        let maps =
            PoolMapSet::new(side, pools, (0..pools * side * side).map(|_| rng.random_range(0.0..0.5)).collect())?;
        let population: Vec<Vec<f64>> =
            (0..8).map(|_| pool_forward(&maps, &random_grid(rng)?)).collect::<Result<_>>()?;
        let stats = fit_norm_stats(&population, 1e-8)?;
        let mut classifier = ClassifierState::random(pools * k, hidden, classes, Activation::Sigmoid, rng);
        classifier.b1.iter_mut().for_each(|b| *b = rng.random_range(-0.5..0.5));
        classifier.b2.iter_mut().for_each(|b| *b = rng.random_range(-0.5..0.5));
        let target = one_hot(rng.random_range(0..classes), classes);
        Ok(Self { grid, maps, stats, classifier, target })
    }
}

/// Settings for [`grad_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckOptions {
    pub step: f64,
    /// Learning rate passed to the map update whose direction is checked.
    pub eta: f64,
    /// Negative control: drop the `1/σ` factor from the analytic map update.
    pub corrupt_update: bool,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self { step: 1e-6, eta: 5e-5, corrupt_update: false }
    }
}

/// Compares backprop and the map update against finite differences on one
/// instance.
///
/// The analytic map gradient is read off [`pool_update`] as `−ΔW/η` with a
/// single-image batch. With `eta = 0` the update must be zero and the map
/// block is reported as exact.
pub fn grad_check(inst: &GradInstance, opts: GradCheckOptions) -> Result<GradCheckReport> {
    let mut report = GradCheckReport::empty();
    report.instances = 1;
    let h = pool_forward(&inst.maps, &inst.grid)?;
    let h_bar = apply_norm(&inst.stats, &h)?;
    let bp = inst.classifier.backward(&h_bar, &inst.target)?;
    let fd = fd_classifier_gradients(&inst.classifier, &h_bar, &inst.target, opts.step)?;
    let analytic = [&bp.grads.v1, &bp.grads.b1, &bp.grads.v2, &bp.grads.b2];
    for (b, block) in analytic.iter().enumerate() {
        for (a, n) in block.iter().zip(&fd[b]) {
            report.record(b, rel_error(*a, *n));
        }
    }
    for (d, n) in bp.delta0.iter().zip(&fd[4]) {
        report.record(4, rel_error(*d, -n));
    }

    let update_stats = if opts.corrupt_update {
        let mut s = NormStats::new(inst.stats.mu().to_vec(), vec![1.0; inst.stats.len()])?;
        s.freeze();
        s
    } else {
        inst.stats.clone()
    };
    // The update does not depend on the current weights, so applying it to
    // zero maps yields ΔW without cancellation against W.
    let mut delta = PoolMapSet::zeros(inst.maps.side(), inst.maps.pools());
    pool_update(&mut delta, &[(&inst.grid, &bp.delta0[..])], &update_stats, opts.eta)?;
    if opts.eta == 0.0 {
        if delta.weights().iter().any(|&d| d != 0.0) {
            report.record(5, f64::INFINITY);
        }
        return Ok(report);
    }
    let fd_w = fd_pool_gradient(&inst.maps, &inst.grid, &inst.stats, &inst.classifier, &inst.target, opts.step)?;
    let side = inst.maps.side();
    let mut worst = (f64::NEG_INFINITY, 0);
    for (idx, (d, n)) in delta.weights().iter().zip(&fd_w).enumerate() {
        let a = -d / opts.eta;
        let err = rel_error(a, *n);
        if err > worst.0 {
            worst = (err, idx);
        }
        report.record(5, err);
    }
    let idx = worst.1;
    report.worst_coordinate = (idx / (side * side), (idx / side) % side, idx % side);
    Ok(report)
}
