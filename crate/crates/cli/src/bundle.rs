//! Versioned model bundle.
//!
//! Little-endian layout: `b"LPMB"`, `u32` version, then in order the config
//! snapshot (`u64` length + UTF-8 `key = value` text), the whitening transform
//! (`u64 d`, `f64 ε`, `d` mean values, `d²` matrix values), the codebook
//! (`u64 k`, `k·d` centroid values), the pool maps (`u64 p`, `u64 P`,
//! `p·P²` weights), the classifier (`u64` inputs, hidden, outputs, `u8`
//! activation, then `v1`, `b1`, `v2`, `b2`) and the normalization statistics
//! (`u64` length, `u8` frozen flag, `μ`, `σ`). Every float is an `f64`.

use std::path::Path;

use learnpool_core::{Activation, ClassifierState, Codebook, NormStats, PoolMapSet, TrainConfig, WhiteningTransform};

use crate::config;
use crate::error::{CliError, CliResult};
use crate::fsutil::write_atomic;

pub const MAGIC: &[u8; 4] = b"LPMB";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub config: TrainConfig,
    pub codebook: Codebook,
    pub maps: PoolMapSet,
    pub classifier: ClassifierState,
    pub stats: NormStats,
}

struct Writer(Vec<u8>);

impl Writer {
    fn u64(&mut self, v: usize) {
        self.0.extend_from_slice(&(v as u64).to_le_bytes());
    }

    fn floats(&mut self, values: &[f64]) {
        for v in values {
            self.0.extend_from_slice(&v.to_le_bytes());
        }
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> CliResult<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| CliError::Bundle(format!("truncated at byte {} (wanted {n} more)", self.pos)))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> CliResult<u8> {
        Ok(self.take(1)?[0])
    }

    fn u64(&mut self) -> CliResult<usize> {
        let v = u64::from_le_bytes(self.take(8)?.try_into().unwrap());
        usize::try_from(v).map_err(|_| CliError::Bundle(format!("size {v} out of range")))
    }

    fn floats(&mut self, count: usize) -> CliResult<Vec<f64>> {
        let bytes = self.take(count.checked_mul(8).ok_or_else(|| CliError::Bundle("size overflow".into()))?)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

impl ModelBundle {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer(Vec::new());
        w.0.extend_from_slice(MAGIC);
        w.0.extend_from_slice(&VERSION.to_le_bytes());

        let text = config::to_text(&self.config);
        w.u64(text.len());
        w.0.extend_from_slice(text.as_bytes());

        let wt = self.codebook.whitening();
        w.u64(wt.dim());
        w.floats(&[wt.epsilon]);
        w.floats(&wt.mean);
        w.floats(&wt.matrix);

        w.u64(self.codebook.k());
        w.floats(self.codebook.centroids());

        w.u64(self.maps.pools());
        w.u64(self.maps.side());
        w.floats(self.maps.weights());

        let c = &self.classifier;
        w.u64(c.inputs);
        w.u64(c.hidden);
        w.u64(c.outputs);
        w.0.push(match c.activation {
            Activation::Sigmoid => 0,
            Activation::Tanh => 1,
        });
        for block in [&c.v1, &c.b1, &c.v2, &c.b2] {
            w.floats(block);
        }

        w.u64(self.stats.len());
        w.0.push(u8::from(self.stats.is_frozen()));
        w.floats(self.stats.mu());
        w.floats(self.stats.sigma());
        w.0
    }

    pub fn from_bytes(bytes: &[u8]) -> CliResult<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(CliError::Bundle("not a model bundle (bad magic)".into()));
        }
        let version = u32::from_le_bytes(r.take(4)?.try_into().unwrap());
        if version != VERSION {
            return Err(CliError::Bundle(format!("format version {version}, expected {VERSION}")));
        }

        let len = r.u64()?;
        let text =
            std::str::from_utf8(r.take(len)?).map_err(|_| CliError::Bundle("config snapshot is not UTF-8".into()))?;
        let cfg = config::apply_text(TrainConfig::full_scale(), text)
            .map_err(|e| CliError::Bundle(format!("config snapshot: {e}")))?;

        let d = r.u64()?;
        let eps = r.floats(1)?[0];
        let mean = r.floats(d)?;
        let matrix = r.floats(d.checked_mul(d).ok_or_else(|| CliError::Bundle("size overflow".into()))?)?;
        let whitening = WhiteningTransform::new(mean, matrix, eps)?;

        let k = r.u64()?;
        let centroids = r.floats(k.saturating_mul(d))?;
        let codebook = Codebook::new(centroids, k, whitening)?;

        let pools = r.u64()?;
        let side = r.u64()?;
        let maps = PoolMapSet::new(side, pools, r.floats(pools.saturating_mul(side).saturating_mul(side))?)?;

        let inputs = r.u64()?;
        let hidden = r.u64()?;
        let outputs = r.u64()?;
        let activation = match r.u8()? {
            0 => Activation::Sigmoid,
            1 => Activation::Tanh,
            other => return Err(CliError::Bundle(format!("unknown activation tag {other}"))),
        };
        let classifier = ClassifierState {
            inputs,
            hidden,
            outputs,
            v1: r.floats(hidden.saturating_mul(inputs))?,
            b1: r.floats(hidden)?,
            v2: r.floats(outputs.saturating_mul(hidden))?,
            b2: r.floats(outputs)?,
            activation,
        };
        classifier.check()?;

        let n = r.u64()?;
        let frozen = r.u8()? != 0;
        let mu = r.floats(n)?;
        let sigma = r.floats(n)?;
        let mut stats = NormStats::new(mu, sigma)?;
        if frozen {
            stats.freeze();
        }
        if r.pos != bytes.len() {
            return Err(CliError::Bundle(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        let bundle = Self { config: cfg, codebook, maps, classifier, stats };
        bundle.check_consistency()?;
        Ok(bundle)
    }

    fn check_consistency(&self) -> CliResult<()> {
        let features = self.maps.pools() * self.codebook.k();
        if self.classifier.inputs != features || self.stats.len() != features {
            return Err(CliError::Bundle(format!(
                "classifier inputs {} / stats length {} do not match p*k = {features}",
                self.classifier.inputs,
                self.stats.len()
            )));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        write_atomic(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use learnpool_core::pooling::{fit_norm_stats, init_quadrant_maps};
    use learnpool_core::seeded_rng;

    pub(crate) fn sample_bundle() -> ModelBundle {
        let mut rng = seeded_rng(3);
        let d = 12;
        let wt = WhiteningTransform::new(
            (0..d).map(|i| i as f64 * 0.1).collect(),
            (0..d * d).map(|i| (i as f64).sin()).collect(),
            0.1,
        )
        .unwrap();
        let codebook = Codebook::new((0..3 * d).map(|i| (i as f64).cos()).collect(), 3, wt).unwrap();
        let maps = init_quadrant_maps(3).unwrap();
        let classifier = ClassifierState::random(12, 4, 2, Activation::Tanh, &mut rng);
        let stats = fit_norm_stats(&[vec![0.5; 12], (0..12).map(f64::from).collect()], 1e-8).unwrap();
        ModelBundle { config: TrainConfig::desk(), codebook, maps, classifier, stats }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let b = sample_bundle();
        let bytes = b.to_bytes();
        let back = ModelBundle::from_bytes(&bytes).unwrap();
        assert_eq!(back, b);
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn version_and_corruption_rejected() {
        let bytes = sample_bundle().to_bytes();
        let mut v2 = bytes.clone();
        v2[4] = 2;
        assert!(matches!(ModelBundle::from_bytes(&v2), Err(CliError::Bundle(m)) if m.contains("version")));
        assert!(ModelBundle::from_bytes(&bytes[..bytes.len() - 3]).is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(ModelBundle::from_bytes(&extra).is_err());
        assert!(ModelBundle::from_bytes(b"nope").is_err());
    }
}
