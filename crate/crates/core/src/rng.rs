//! Reproducible random streams.
//!
//! Every replication gets its own ChaCha8 stream. The 256-bit key is
//! expanded from `(seed, purpose)` with SplitMix64 and the ChaCha stream id
//! is the replication index, so draws depend only on
//! `(seed, replication, purpose)` and never on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type ColonyRng = ChaCha8Rng;

/// Independent sub-streams used by different parts of the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Simulation = 1,
    Stationary = 2,
    Renewal = 3,
    Validation = 4,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream_rng(seed: u64, replication: u64, purpose: Purpose) -> ColonyRng {
    let mut state = seed ^ (purpose as u64).wrapping_mul(0xD6E8_FEB8_6659_FD93);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(replication);
    rng
}
