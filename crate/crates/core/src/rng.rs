//! Named, seed-derived random streams.
//!
//! Every randomized operation takes an explicit `u64` seed and a stream name
//! such as `"train/model/0"` or `"lime/perturb"`. Streams with different
//! names are independent ChaCha streams of the same seeded cipher, so adding
//! a consumer never perturbs the draws seen by existing ones.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// FNV-1a, used only to map stream names to ChaCha stream ids. Stable by
/// definition, unlike `core::hash` hashers.
fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Deterministic RNG for the given root seed and stream name.
pub fn stream(seed: u64, name: &str) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(fnv1a(name.as_bytes()));
    rng
}
