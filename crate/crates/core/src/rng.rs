//! Counter-based seed derivation so any frame can be regenerated alone.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent random streams used per frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Channel = 1,
    Bits = 2,
    Noise = 3,
    Init = 4,
    Shuffle = 5,
    Diagnostic = 6,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for `(master, counter, stream)`.
pub fn derive_seed(master: u64, counter: u64, stream: Stream) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ counter) ^ stream as u64)
}

pub fn stream_rng(master: u64, counter: u64, stream: Stream) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, counter, stream))
}
