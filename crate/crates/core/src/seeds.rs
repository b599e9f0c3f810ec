//! Deterministic seed derivation.
//!
//! One master seed fans out into independent streams (data generation,
//! parameter init, augmentation, ...) so that reordering work in one stream
//! never perturbs another. Derivation is plain integer mixing and therefore
//! identical on every platform.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Named top-level streams split off the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    DataGen,
    ModelInit,
    Augment,
    Sampler,
    Eval,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::DataGen => 0x01,
            Stream::ModelInit => 0x02,
            Stream::Augment => 0x03,
            Stream::Sampler => 0x04,
            Stream::Eval => 0x05,
        }
    }
}

/// SplitMix64 finalizer; full-period bijective mixer.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for a named stream of the master seed.
pub fn stream_seed(master: u64, stream: Stream) -> u64 {
    splitmix64(master ^ splitmix64(stream.tag()))
}

/// Seed for the `index`-th child of a stream (e.g. per-tracklet generators).
pub fn child_seed(stream_seed: u64, index: u64) -> u64 {
    splitmix64(stream_seed.wrapping_add(splitmix64(index ^ 0xA076_1D64_78BD_642F)))
}

/// Convenience constructor for the RNG used throughout the crate.
pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
