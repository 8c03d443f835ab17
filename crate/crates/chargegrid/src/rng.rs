//! Deterministic stream derivation.
//!
//! Every stochastic operation in the crate draws from a ChaCha stream keyed
//! by `(seed, purpose, index)`, so sampling, thinning, and per-sample Monte
//! Carlo streams are independently reproducible and safe to evaluate in
//! parallel.

use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;

pub const PURPOSE_MPLP_VERTICAL: u64 = 0x01;
pub const PURPOSE_MPLP_HORIZONTAL: u64 = 0x02;
pub const PURPOSE_THIN_VERTICAL: u64 = 0x03;
pub const PURPOSE_THIN_HORIZONTAL: u64 = 0x04;
pub const PURPOSE_MC_SAMPLE: u64 = 0x10;
pub const PURPOSE_MC_CONDITIONED: u64 = 0x11;
pub const PURPOSE_MC_CROSSING: u64 = 0x12;
pub const PURPOSE_ROAD_ASSIGN: u64 = 0x20;
pub const PURPOSE_ZONE_ENDPOINT: u64 = 0x21;
pub const PURPOSE_SYNTH_TRIPS: u64 = 0x22;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mix `(seed, purpose, index)` into a single stream key.
pub fn mix(seed: u64, purpose: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ splitmix64(purpose)) ^ index)
}

/// RNG for a `(seed, purpose)` stream.
pub fn stream(seed: u64, purpose: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed, purpose, 0))
}

/// RNG for the `index`-th substream of a `(seed, purpose)` stream.
pub fn substream(seed: u64, purpose: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed, purpose, index.wrapping_add(1)))
}

/// Deterministic uniform in `[0, 1)` keyed by a seed and a string, used for
/// per-road charging assignment so the draw survives reordering of the
/// road list.
pub fn keyed_unit(seed: u64, purpose: u64, key: &str) -> f64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in key.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let bits = splitmix64(mix(seed, purpose, h));
    // 53 high bits -> [0, 1)
    (bits >> 11) as f64 / (1u64 << 53) as f64
}
