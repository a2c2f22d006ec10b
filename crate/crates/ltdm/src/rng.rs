//! Deterministic seeded randomness.
//!
//! All randomness flows from one root seed through named sub-streams, so a
//! component (generation, initialization, Gibbs) can be re-seeded on its own
//! and per-record streams stay identical regardless of evaluation order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// splitmix64 finalizer; good single-word avalanche.
fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn mix_str(seed: u64, tag: &str) -> u64 {
    let mut h = mix(seed ^ 0x517c_c1b7_2722_0a95);
    for &b in tag.as_bytes() {
        h = mix(h ^ u64::from(b));
    }
    h
}

/// A named stream of the root seed, e.g. `stream(seed, "generate")`.
pub fn stream(seed: u64, tag: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_str(seed, tag))
}

/// An indexed sub-stream, e.g. one per record. Independent of the order in
/// which sibling streams are consumed.
pub fn substream(seed: u64, tag: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(mix_str(seed, tag) ^ mix(index)))
}
