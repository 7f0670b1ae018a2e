//! Deterministic seed derivation.
//!
//! Per-video seeds are derived from the master seed with a stable mix so
//! batch results do not depend on processing order or the std hasher.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer. Stable across platforms and releases.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed for one video's jobs: master ⊕ mix(video_id), so adding or
/// removing videos never perturbs the others.
pub fn video_seed(master: u64, video_id: u32) -> u64 {
    master ^ splitmix64(video_id as u64)
}

/// A seed further separated by stage name, so e.g. window choice and
/// frame retention draw from independent streams.
pub fn stage_seed(master: u64, stage: &str) -> u64 {
    let mut h = 0u64;
    for &b in stage.as_bytes() {
        h = splitmix64(h ^ b as u64);
    }
    master ^ h
}

pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn video_seeds_are_distinct_and_stable() {
        assert_ne!(video_seed(7, 1), video_seed(7, 2));
        assert_eq!(video_seed(7, 1), video_seed(7, 1));
        // frozen so accidental algorithm changes show up
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
    }

    #[test]
    fn stage_seeds_differ_per_stage() {
        assert_ne!(stage_seed(0, "window"), stage_seed(0, "retain"));
    }
}
