//! Counter-based random streams keyed by `(seed, replicate, index)`.
//!
//! Every spell, bootstrap replicate or panel worker draws from its own ChaCha
//! stream, so results do not depend on evaluation order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Words reserved per index inside one stream.
const WORDS_PER_INDEX: u128 = 1 << 32;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed recorded for replicate `replicate` of a run with master seed `seed`.
pub fn derive_seed(seed: u64, replicate: u64) -> u64 {
    splitmix64(seed ^ splitmix64(replicate.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

/// Stream for one draw site.
pub fn stream(seed: u64, replicate: u64, index: u64) -> StreamRng {
    let mut key = [0u8; 32];
    let mut s = seed;
    for chunk in key.chunks_exact_mut(8) {
        s = splitmix64(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(replicate);
    rng.set_word_pos(index as u128 * WORDS_PER_INDEX);
    rng
}
