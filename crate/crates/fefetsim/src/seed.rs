//! Deterministic stream derivation from a single master seed.
//!
//! Every random draw in the simulator comes from a `ChaCha8` stream keyed by
//! `(master_seed, purpose, index)`. Streams for different cells, ADC
//! instances, or query sets never overlap, and results are independent of
//! evaluation order and thread count.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream purpose tags. Distinct purposes decorrelate streams that share an
/// index (e.g. cell 3 and ADC instance 3).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Cell = 0x01,
    Adc = 0x02,
    Query = 0x03,
    Blobs = 0x04,
    GraphGen = 0x05,
    Replicate = 0x06,
}

/// SplitMix64 finalizer; bijective on u64.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Mix `(master_seed, purpose, index)` into a stream key.
pub fn stream_key(master_seed: u64, purpose: Purpose, index: u64) -> u64 {
    splitmix64(splitmix64(master_seed ^ splitmix64(purpose as u64)) ^ index)
}

/// RNG for the stream `(master_seed, purpose, index)`.
pub fn stream_rng(master_seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_key(master_seed, purpose, index))
}
