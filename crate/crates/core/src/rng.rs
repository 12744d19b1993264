//! Deterministic seeded randomness.
//!
//! All random draws in the crate flow through [`SeededRng`] instances created
//! by [`rng_for`]. Child seeds are derived by the pure function [`child_seed`]
//! from `(master seed, role, index)`, so any consumer can reproduce a stream
//! without shared RNG state. Roles used by the crate:
//!
//! * `"batch"`, `"rep"`, `"boot-sample"`, `"boot-fit"`: harness child fits
//! * `"kmeans-start"`: one stream per k-means restart
//! * `"em-start"`: one stream per EM restart
//! * `"random-assign"`: the random-partition backend
//! * `"tie-break"`, `"weighted-assign"`: assignment strategies
//! * `"simulate"`: the synthetic data generator

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The RNG used everywhere; byte-reproducible for a given seed.
pub type SeededRng = ChaCha8Rng;

/// SplitMix64 finalizer, used to decorrelate nearby seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(s: &str) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for byte in s.bytes() {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Derive the child seed for (`role`, `index`) under `master`.
pub fn child_seed(master: u64, role: &str, index: u64) -> u64 {
    mix(mix(master ^ fnv1a(role)) ^ index)
}

/// A fresh RNG positioned at the start of the `(master, role, index)` stream.
pub fn rng_for(master: u64, role: &str, index: u64) -> SeededRng {
    SeededRng::seed_from_u64(child_seed(master, role, index))
}
