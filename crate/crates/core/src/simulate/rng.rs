//! Per-path random substreams.
//!
//! A path is keyed by `(seed, cell, path)`. Each noise source of the scheme
//! reads from its own ChaCha stream under that key, so two runs that make the
//! same decisions consume identical numbers from every source.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Source {
    BranchingDiffusion = 1,
    EnvironmentDiffusion = 2,
    BigJumps = 3,
    SmallJumps = 4,
    EnvironmentJumps = 5,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn path_key(seed: u64, cell: u64, path: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ cell) ^ path.rotate_left(32))
}

pub(crate) fn substream(key: u64, source: Source) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(source as u64);
    rng
}
