//! Trainable pooling: `p` weight maps of size `P×P`, each shared by all `k`
//! codeword channels, frozen post-pool normalization and the map update rule.
//!
//! Pooled vectors are pool-major: entry `(i, c)` lives at `i·k + c`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::codebook::EncodedGrid;
use crate::{checksum_f64, Error, Result};

/// Index of pool `i`, codeword `c` in a pooled vector.
#[inline]
pub const fn pooled_index(i: usize, c: usize, k: usize) -> usize {
    i * k + c
}

/// Inverse of [`pooled_index`].
#[inline]
pub const fn pooled_coords(index: usize, k: usize) -> (usize, usize) {
    (index / k, index % k)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoolMapSet {
    side: usize,
    pools: usize,
    /// Map `i`, row `m`, column `n` at `(i·P + m)·P + n`.
    weights: Vec<f64>,
}

impl PoolMapSet {
    pub fn new(side: usize, pools: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != pools * side * side {
            return Err(Error::argument(format!(
                "{pools} maps of {side}x{side} need {} weights, got {}",
                pools * side * side,
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Data("non-finite pool weight".into()));
        }
        Ok(Self { side, pools, weights })
    }

    pub fn zeros(side: usize, pools: usize) -> Self {
        Self { side, pools, weights: vec![0.0; pools * side * side] }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn pools(&self) -> usize {
        self.pools
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn map(&self, i: usize) -> &[f64] {
        let area = self.side * self.side;
        &self.weights[i * area..(i + 1) * area]
    }

    #[inline]
    pub fn weight(&self, i: usize, m: usize, n: usize) -> f64 {
        self.weights[(i * self.side + m) * self.side + n]
    }

    pub fn checksum(&self) -> u64 {
        checksum_f64(&self.weights)
    }
}

/// Row/column ranges of the four quadrants, split at `⌈P/2⌉`, in the order
/// upper-left, upper-right, lower-left, lower-right.
pub fn quadrant_ranges(side: usize) -> [(core::ops::Range<usize>, core::ops::Range<usize>); 4] {
    let cut = side.div_ceil(2);
    [(0..cut, 0..cut), (0..cut, cut..side), (cut..side, 0..cut), (cut..side, cut..side)]
}

/// Four maps replicating quadrant average pooling: each map is `1/area`
/// inside its quadrant and zero elsewhere.
pub fn init_quadrant_maps(side: usize) -> Result<PoolMapSet> {
    if side < 2 {
        return Err(Error::argument(format!("quadrant maps need P >= 2, got {side}")));
    }
    let mut maps = PoolMapSet::zeros(side, 4);
    for (i, (rows, cols)) in quadrant_ranges(side).into_iter().enumerate() {
        let value = 1.0 / (rows.len() * cols.len()) as f64;
        for m in rows {
            for n in cols.clone() {
                maps.weights[(i * side + m) * side + n] = value;
            }
        }
    }
    Ok(maps)
}

/// `h[(i,c)] = Σ_m Σ_n W^i[m,n] · g[m,n,c]`.
pub fn pool_forward(maps: &PoolMapSet, g: &EncodedGrid) -> Result<Vec<f64>> {
    if maps.side != g.side() {
        return Err(Error::argument(format!("pool maps are {0}x{0} but the grid is {1}x{1}", maps.side, g.side())));
    }
    let k = g.k();
    let area = maps.side * maps.side;
    let mut h = vec![0.0; maps.pools * k];
    for i in 0..maps.pools {
        let out = &mut h[i * k..(i + 1) * k];
        for (cell, &w) in maps.map(i).iter().enumerate() {
            let codes = &g.values()[cell * k..(cell + 1) * k];
            for (o, v) in out.iter_mut().zip(codes) {
                *o += w * v;
            }
        }
        debug_assert_eq!(maps.map(i).len(), area);
    }
    Ok(h)
}

/// Post-pool normalization statistics. Once frozen they never change.
#[derive(Debug, Clone, PartialEq)]
pub struct NormStats {
    mu: Vec<f64>,
    sigma: Vec<f64>,
    frozen: bool,
}

impl NormStats {
    /// Unfrozen stats. Every sigma must be positive.
    pub fn new(mu: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        if mu.len() != sigma.len() {
            return Err(Error::argument("mu and sigma lengths differ"));
        }
        if sigma.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return Err(Error::argument("sigma values must be positive and finite"));
        }
        Ok(Self { mu, sigma, frozen: false })
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    /// Re-estimates unfrozen stats in place and freezes them.
    pub fn refit(&mut self, pooled: &[Vec<f64>], sigma_floor: f64) -> Result<()> {
        if self.frozen {
            return Err(Error::state("normalization statistics are frozen"));
        }
        *self = fit_norm_stats(pooled, sigma_floor)?;
        Ok(())
    }

    pub fn checksum(&self) -> u64 {
        checksum_f64(&self.mu) ^ checksum_f64(&self.sigma).rotate_left(1)
    }
}

/// Per-index mean and population standard deviation, sigma floored at
/// `sigma_floor`. Returned frozen.
pub fn fit_norm_stats(pooled: &[Vec<f64>], sigma_floor: f64) -> Result<NormStats> {
    if pooled.len() < 2 {
        return Err(Error::argument(format!("need at least 2 pooled vectors, got {}", pooled.len())));
    }
    if sigma_floor.is_nan() || sigma_floor <= 0.0 {
        return Err(Error::argument("sigma_floor must be positive"));
    }
    let len = pooled[0].len();
    if pooled.iter().any(|h| h.len() != len) {
        return Err(Error::argument("pooled vectors differ in length"));
    }
    let count = pooled.len() as f64;
    let mut mu = vec![0.0; len];
    for h in pooled {
        for (m, v) in mu.iter_mut().zip(h) {
            *m += v;
        }
    }
    mu.iter_mut().for_each(|m| *m /= count);
    let mut var = vec![0.0; len];
    for h in pooled {
        for ((s, v), m) in var.iter_mut().zip(h).zip(&mu) {
            *s += (v - m) * (v - m);
        }
    }
    let sigma = var.into_iter().map(|s| libm::sqrt(s / count).max(sigma_floor)).collect();
    Ok(NormStats { mu, sigma, frozen: true })
}

/// `(h − μ) / σ`, elementwise. Requires frozen stats.
pub fn apply_norm(stats: &NormStats, h: &[f64]) -> Result<Vec<f64>> {
    if !stats.frozen {
        return Err(Error::state("normalization statistics must be frozen before use"));
    }
    if h.len() != stats.len() {
        return Err(Error::argument(format!("pooled vector has length {}, stats have {}", h.len(), stats.len())));
    }
    Ok(h.iter().zip(&stats.mu).zip(&stats.sigma).map(|((v, m), s)| (v - m) / s).collect())
}

/// Raw and normalized pooled features for one image.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledVector {
    pub h: Vec<f64>,
    pub h_bar: Vec<f64>,
}

impl PooledVector {
    pub fn new(h: Vec<f64>, stats: &NormStats) -> Result<Self> {
        let h_bar = apply_norm(stats, &h)?;
        Ok(Self { h, h_bar })
    }
}

fn check_update_inputs(maps: &PoolMapSet, g: &EncodedGrid, delta0: &[f64], stats: &NormStats) -> Result<()> {
    if g.side() != maps.side {
        return Err(Error::argument("grid and map sizes differ"));
    }
    let expect = maps.pools * g.k();
    if delta0.len() != expect || stats.len() != expect {
        return Err(Error::argument(format!(
            "delta0 ({}) and stats ({}) must both have length p*k = {expect}",
            delta0.len(),
            stats.len()
        )));
    }
    Ok(())
}

/// Adds `Σ_c δ⁰[(i,c)] · g[m,n,c] / σ[(i,c)]` into `acc` (laid out like the maps).
fn accumulate_step(maps: &PoolMapSet, g: &EncodedGrid, delta0: &[f64], stats: &NormStats, acc: &mut [f64]) {
    let k = g.k();
    let area = maps.side * maps.side;
    for i in 0..maps.pools {
        let coeff: Vec<f64> =
            (0..k).map(|c| delta0[pooled_index(i, c, k)] / stats.sigma[pooled_index(i, c, k)]).collect();
        let out = &mut acc[i * area..(i + 1) * area];
        for (cell, o) in out.iter_mut().enumerate() {
            let codes = &g.values()[cell * k..(cell + 1) * k];
            *o += codes.iter().zip(&coeff).map(|(v, a)| v * a).sum::<f64>();
        }
    }
}

/// Analytic `∂J/∂W` for one image, `= −Σ_c δ⁰[(i,c)] · g[m,n,c] / σ[(i,c)]`,
/// laid out like the maps.
pub fn pool_gradient(maps: &PoolMapSet, g: &EncodedGrid, delta0: &[f64], stats: &NormStats) -> Result<Vec<f64>> {
    check_update_inputs(maps, g, delta0, stats)?;
    let mut acc = vec![0.0; maps.weights.len()];
    accumulate_step(maps, g, delta0, stats, &mut acc);
    acc.iter_mut().for_each(|v| *v = -*v);
    Ok(acc)
}

/// One map update from a mini-batch of `(g, δ⁰)` pairs:
/// `W^i ← W^i + η · (1/B) Σ_b Σ_c δ⁰[(i,c)] · g[m,n,c] / σ[(i,c)]`.
///
/// Contributions are summed in batch order before a single application.
pub fn pool_update(maps: &mut PoolMapSet, batch: &[(&EncodedGrid, &[f64])], stats: &NormStats, eta: f64) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::argument("empty pool-update batch"));
    }
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::argument(format!("learning rate {eta} must be finite and >= 0")));
    }
    for (g, d) in batch {
        check_update_inputs(maps, g, d, stats)?;
    }
    let mut acc = vec![0.0; maps.weights.len()];
    for (g, d) in batch {
        accumulate_step(maps, g, d, stats, &mut acc);
    }
    let scale = eta / batch.len() as f64;
    for (w, a) in maps.weights.iter_mut().zip(&acc) {
        *w += scale * a;
    }
    Ok(())
}
