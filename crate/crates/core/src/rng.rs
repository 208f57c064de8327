//! Seed plumbing. Every stochastic routine takes an explicit seed or rng so
//! runs replay exactly.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type PlanRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> PlanRng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent child seed from `(master, stream, index)`.
///
/// Used wherever work is split into units (workspaces, trials) so that serial
/// and parallel execution see the same random streams.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ stream.rotate_left(17)) ^ index.rotate_left(41))
}
