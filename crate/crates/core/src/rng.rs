//! Seeded, splittable random streams.
//!
//! Every stochastic routine in this crate draws from a ChaCha stream keyed
//! by `(master seed, domain, index)`. Streams with distinct keys are
//! statistically independent, so adding draws in one domain (say, appended
//! noise columns) never perturbs another (the base design). This is what
//! makes whole runs byte-for-byte reproducible from a single seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used throughout the crate.
pub type StreamRng = ChaCha8Rng;

/// Stream domains. Each purpose owns a domain so draws never interleave.
pub mod domain {
    pub const COVARIANCE: u64 = 0;
    pub const BETA: u64 = 1;
    pub const DESIGN: u64 = 2;
    pub const AUGMENT: u64 = 3;
    pub const FOLDS: u64 = 4;
    pub const SPLIT: u64 = 5;
    pub const SUBSETS: u64 = 6;
    pub const TAU_SUBSETS: u64 = 7;
    pub const LAMBDA_SUBSETS: u64 = 8;
}

/// Stream keyed by `(seed, domain, index)`. `index` is typically a
/// replicate number; the low 56 bits are used.
pub fn stream(seed: u64, domain: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((domain << 56) | (index & 0x00FF_FFFF_FFFF_FFFF));
    rng
}

/// Derives a fresh seed from `(seed, tag)` (one splitmix64 round).
/// Useful when an API wants a seed rather than a stream.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
