//! Seeded random streams.
//!
//! Every random draw in the crate goes through ChaCha8 keyed by `(seed, stream)`,
//! so the same seed reproduces the same bits on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub type Rng = ChaCha8Rng;

/// Stream ids keep independent consumers of one seed from overlapping.
pub mod stream {
    pub const SPHERE: u64 = 1;
    pub const ROTATION: u64 = 2;
    pub const EMPIRICAL_GRAM: u64 = 3;
    pub const TWO_LAYER: u64 = 4;
    pub const DEEP: u64 = 5;
    pub const POLE: u64 = 6;
}

pub fn seeded(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn standard_normal(rng: &mut Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn normal_vec(rng: &mut Rng, len: usize, sigma: f64) -> Vec<f64> {
    (0..len).map(|_| sigma * standard_normal(rng)).collect()
}

/// Mixes a base seed with a cell index (splitmix64 finalizer).
pub fn derive(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
