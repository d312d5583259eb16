//! Seeded random sources.
//!
//! Every random draw in the crate comes from a ChaCha8 stream keyed by
//! `seed_from_u64(seed)`, with independent sub-streams selected through the
//! ChaCha stream counter. Gaussian draws use `rand_distr::StandardNormal`.

use alloc::vec::Vec;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::embedding::{normalize, EmbeddingVector};

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` under the same seed.
pub fn substream(seed: u64, stream: u64) -> SeededRng {
    let mut rng = seeded(seed);
    rng.set_stream(stream);
    rng
}

/// Seed for the `index`-th item of a sweep keyed by `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    substream(seed, index).next_u64()
}

pub fn gaussian_vec(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Uniform point on the unit sphere.
pub fn unit_vector(rng: &mut impl Rng, dim: usize) -> EmbeddingVector {
    assert!(dim >= 2, "embedding dimension must be at least 2");
    loop {
        if let Ok(v) = normalize(&gaussian_vec(rng, dim)) {
            return v;
        }
    }
}
