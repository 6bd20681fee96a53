//! Single-layer image feature pipeline (dense patches, ZCA whitening, k-means
//! codebook, triangle encoding) whose spatial pooling stage is a set of
//! trainable weight maps, tuned by gradient descent from classifier error.
//!
//! The crate is `no_std` + `alloc`. The `parallel` feature pulls in std and
//! rayon for data-parallel encoding and evaluation; every reduction is done in
//! index order so results do not depend on the thread count.

#![cfg_attr(not(any(feature = "parallel", test)), no_std)]

extern crate alloc;

pub mod classifier;
pub mod codebook;
pub mod dataset;
mod dd;
mod error;
pub mod par;
pub mod pooling;
pub mod preprocess;
pub mod training;
pub mod verify;

pub use classifier::{Activation, BackpropResult, ClassifierGrads, ClassifierState};
pub use codebook::{Codebook, EncodedGrid};
pub use dataset::{DatasetSplit, ImageSample};
pub use error::{Error, Result};
pub use pooling::{NormStats, PoolMapSet, PooledVector};
pub use preprocess::{Patch, WhiteningTransform};
pub use training::{TrainConfig, TrainReport};

/// Seeded generator used everywhere randomness is needed.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Builds the crate's generator from a 64-bit seed.
pub fn seeded_rng(seed: u64) -> Rng {
    use rand::SeedableRng;
    Rng::seed_from_u64(seed)
}

/// FNV-1a over the bit patterns of a float slice. Used for freeze checks.
pub fn checksum_f64(values: &[f64]) -> u64 {
    values.iter().fold(0xcbf2_9ce4_8422_2325_u64, |mut hash, v| {
        for byte in v.to_bits().to_le_bytes() {
            hash ^= u64::from(byte);
            hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
        }
        hash
    })
}
