//! Counter-based RNG streams.
//!
//! Trial `t` at point `p` always sees the same stream whatever the thread
//! count or execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream key reserved for the per-run static channel draw.
pub const STATIC_POINT: u64 = u64::MAX;
/// Stream key reserved for the random precoder draw.
pub const PRECODER_POINT: u64 = u64::MAX - 1;

/// SplitMix64 finalizer.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Generator for `(seed, point, trial)`: the key selects the ChaCha seed and
/// the trial selects the stream.
pub fn trial_rng(seed: u64, point: u64, trial: u64) -> ChaCha8Rng {
    let key = splitmix64(seed ^ splitmix64(point));
    let mut bytes = [0u8; 32];
    let mut state = key;
    for chunk in bytes.chunks_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(bytes);
    rng.set_stream(trial);
    rng
}
