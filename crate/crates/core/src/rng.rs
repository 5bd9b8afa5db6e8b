//! Deterministic, splittable randomness.
//!
//! Every stochastic component takes an explicit generator. Trials derive
//! independent child seeds from a master seed with a SplitMix64 hash, so a
//! run is reproducible bit-for-bit from `(master_seed, trial_index)` and
//! trials can execute in parallel in any order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// The generator used throughout the crate. ChaCha keeps the stream stable
/// across platforms and library versions, unlike `StdRng`.
pub type Rng = ChaCha12Rng;

/// SplitMix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive an independent child seed for stream `index` of `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ splitmix64(index.wrapping_add(0x51ed_270b)))
}

/// Seed a generator directly.
pub fn rng_from_seed(seed: u64) -> Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Generator for trial `index` under `master`.
pub fn trial_rng(master: u64, index: u64) -> Rng {
    rng_from_seed(derive_seed(master, index))
}
