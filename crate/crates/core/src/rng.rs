//! Deterministic random streams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by
//! `splitmix64(seed ^ domain)` with the ChaCha stream id set to a per-item
//! index (replicate, replication, resample attempt). Results therefore do not
//! depend on how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Identifier recorded in reports for reproducibility.
pub const RNG_ALGORITHM: &str =
    "ChaCha8Rng(seed_from_u64(splitmix64(seed ^ domain))), stream = item index";

/// Domain tags separating independent uses of one user seed.
pub mod domain {
    pub const DGP_SPEC: u64 = 0x6467_7073_7065_6301;
    pub const DATASET: u64 = 0x6461_7461_7365_7402;
    pub const BOOTSTRAP: u64 = 0x626f_6f74_7374_7203;
    pub const STUDY: u64 = 0x7374_7564_7900_0004;
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for item `index` of `domain` under `seed`.
pub fn stream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ domain));
    rng.set_stream(index);
    rng
}

/// Derives a child seed, e.g. the DGP seed of replication `index`.
pub fn child_seed(seed: u64, domain: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed ^ domain).wrapping_add(splitmix64(index)))
}
