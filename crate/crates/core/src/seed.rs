//! Seed derivation for runs, grid points and per-layer random streams.
//!
//! Built on the SplitMix64 finaliser, which is a bijection on `u64`: for a fixed
//! base and grid index, distinct run indices always map to distinct seeds.

use rand::SeedableRng;
use rand_pcg::Pcg64;

pub const GRAPH_STREAM: u64 = u64::MAX;
pub const INFO_STREAM: u64 = 1;
pub const EPI_STREAM: u64 = 2;

#[inline]
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `splitmix64(splitmix64(splitmix64(base) ^ run_index) ^ grid_index)`.
pub fn derive_seed(base_seed: u64, run_index: u64, grid_index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base_seed) ^ run_index) ^ grid_index)
}

/// Seed of the network used by a run whose own seed is `run_seed`.
pub fn graph_seed_for(run_seed: u64) -> u64 {
    derive_seed(run_seed, GRAPH_STREAM, 0)
}

/// Independent generator for one dynamical layer of a run.
pub fn layer_rng(run_seed: u64, stream: u64) -> Pcg64 {
    Pcg64::seed_from_u64(derive_seed(run_seed, stream, 0))
}
