//! Image samples, the CIFAR-10 binary record layout, deterministic
//! train/validation splits and a synthetic two-class dataset whose class is
//! carried purely by the spatial location of a texture block.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::{seeded_rng, Error, Result};

/// Number of colour channels in every image.
pub const CHANNELS: usize = 3;

/// Side length of CIFAR-10 images.
pub const CIFAR_SIDE: usize = 32;

/// Bytes in one CIFAR-10 record for side `n`: one label byte plus the planes.
pub const fn record_len(n: usize) -> usize {
    1 + CHANNELS * n * n
}

/// An `n`×`n` RGB image on the [0, 255] scale with its class label.
///
/// Pixels are stored plane-major: all red rows, then green, then blue, each
/// plane row-major. This is the CIFAR record order.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageSample {
    side: usize,
    pixels: Vec<f64>,
    label: usize,
}

impl ImageSample {
    pub fn new(side: usize, pixels: Vec<f64>, label: usize, classes: usize) -> Result<Self> {
        if side == 0 {
            return Err(Error::argument("image side must be positive"));
        }
        if pixels.len() != CHANNELS * side * side {
            return Err(Error::argument(format!(
                "expected {} pixel values for side {side}, got {}",
                CHANNELS * side * side,
                pixels.len()
            )));
        }
        if label >= classes {
            return Err(Error::Data(format!("label {label} not below class count {classes}")));
        }
        if let Some(bad) = pixels.iter().find(|v| !(v.is_finite() && (0.0..=255.0).contains(*v))) {
            return Err(Error::Data(format!("pixel value {bad} outside [0, 255]")));
        }
        Ok(Self { side, pixels, label })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn label(&self) -> usize {
        self.label
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    #[inline]
    pub fn pixel(&self, channel: usize, row: usize, col: usize) -> f64 {
        self.pixels[(channel * self.side + row) * self.side + col]
    }
}

/// Decodes a buffer of concatenated CIFAR-10 style records.
///
/// Each record is a label byte followed by `3·n²` pixel bytes (red plane,
/// green plane, blue plane, row-major). Pixel bytes become floats unscaled.
pub fn decode_cifar_records(bytes: &[u8], n: usize, classes: usize) -> Result<Vec<ImageSample>> {
    let len = record_len(n);
    let full = bytes.len() / len;
    if !bytes.len().is_multiple_of(len) {
        let offset = full * len;
        return Err(Error::Format {
            offset,
            message: format!("truncated record: {} trailing bytes, record length is {len}", bytes.len() - offset),
        });
    }
    bytes
        .chunks_exact(len)
        .enumerate()
        .map(|(i, rec)| {
            let label = usize::from(rec[0]);
            if label >= classes {
                return Err(Error::Data(format!(
                    "record {i} (byte offset {}): label byte {label} not below {classes}",
                    i * len
                )));
            }
            let pixels = rec[1..].iter().map(|&b| f64::from(b)).collect();
            Ok(ImageSample { side: n, pixels, label })
        })
        .collect()
}

/// Appends one sample in CIFAR record layout. Pixels are rounded to bytes.
pub fn encode_cifar_record(sample: &ImageSample, out: &mut Vec<u8>) -> Result<()> {
    let label = u8::try_from(sample.label)
        .map_err(|_| Error::Data(format!("label {} does not fit in a byte", sample.label)))?;
    out.reserve(record_len(sample.side));
    out.push(label);
    out.extend(sample.pixels.iter().map(|&v| libm::round(v) as u8));
    Ok(())
}

/// Disjoint train/validation partition of a sample list.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<ImageSample>,
    pub validation: Vec<ImageSample>,
    /// Original indices of `train`, in order.
    pub train_indices: Vec<usize>,
    /// Original indices of `validation`, in order.
    pub validation_indices: Vec<usize>,
    pub seed: u64,
}

/// Seeded shuffle, then the first `⌊fraction·N⌋` go to train.
pub fn split(samples: &[ImageSample], fraction: f64, seed: u64) -> Result<DatasetSplit> {
    if samples.len() < 2 {
        return Err(Error::argument(format!("need at least 2 samples to split, got {}", samples.len())));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::argument(format!("split fraction {fraction} not in (0, 1)")));
    }
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut seeded_rng(seed));
    let cut = libm::floor(fraction * samples.len() as f64) as usize;
    let (train_idx, val_idx) = order.split_at(cut);
    Ok(DatasetSplit {
        train: train_idx.iter().map(|&i| samples[i].clone()).collect(),
        validation: val_idx.iter().map(|&i| samples[i].clone()).collect(),
        train_indices: train_idx.to_vec(),
        validation_indices: val_idx.to_vec(),
        seed,
    })
}

/// Side of the square texture block used by [`generate_synthetic`].
pub fn texture_block(n: usize) -> usize {
    n.div_ceil(2)
}

/// Two-class desk-scale dataset.
///
/// Class 0 carries a high-contrast texture block of side `⌈n/2⌉` in the
/// upper-left corner, class 1 in the lower-right corner. The rest of the image
/// is a dim low-variance background. Labels alternate 0, 1, 0, ... so the
/// classes are balanced within one.
pub fn generate_synthetic(count: usize, n: usize, seed: u64) -> Result<Vec<ImageSample>> {
    if count == 0 {
        return Err(Error::argument("synthetic sample count must be at least 1"));
    }
    if n < 2 {
        return Err(Error::argument(format!("image side {n} cannot hold a quadrant texture block")));
    }
    let block = texture_block(n);
    let mut rng = seeded_rng(seed);
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let label = i % 2;
        let origin = if label == 0 { 0 } else { n - block };
        let mut pixels = Vec::with_capacity(CHANNELS * n * n);
        for _channel in 0..CHANNELS {
            for row in 0..n {
                for col in 0..n {
                    let inside = (origin..origin + block).contains(&row) && (origin..origin + block).contains(&col);
                    let v = if inside {
                        let jitter: f64 = rng.random_range(0.0..48.0);
                        if (row + col) % 2 == 0 {
                            255.0 - jitter
                        } else {
                            jitter
                        }
                    } else {
                        128.0 + rng.random_range(-8.0..8.0)
                    };
                    pixels.push(v);
                }
            }
        }
        out.push(ImageSample { side: n, pixels, label });
    }
    Ok(out)
}

/// Pixel variance of each quadrant (all channels pooled), quadrants split at
/// `⌈n/2⌉` and ordered upper-left, upper-right, lower-left, lower-right.
pub fn quadrant_variances(sample: &ImageSample) -> [f64; 4] {
    let n = sample.side;
    let cut = n.div_ceil(2);
    let mut sums = [0.0; 4];
    let mut sq = [0.0; 4];
    let mut counts = [0usize; 4];
    for c in 0..CHANNELS {
        for row in 0..n {
            for col in 0..n {
                let q = usize::from(row >= cut) * 2 + usize::from(col >= cut);
                let v = sample.pixel(c, row, col);
                sums[q] += v;
                sq[q] += v * v;
                counts[q] += 1;
            }
        }
    }
    let mut var = [0.0; 4];
    for q in 0..4 {
        if counts[q] > 0 {
            let m = sums[q] / counts[q] as f64;
            var[q] = sq[q] / counts[q] as f64 - m * m;
        }
    }
    var
}
