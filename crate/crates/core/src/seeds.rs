//! Named random substreams derived from a single root seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Seed of the substream `name` under `root`.
pub fn derive(root: u64, name: &str) -> u64 {
    splitmix64(root ^ splitmix64(fnv1a(name)))
}

/// Seed of the `index`-th child of `seed`.
pub fn child(seed: u64, index: u64) -> u64 {
    splitmix64(seed.wrapping_add(splitmix64(index.wrapping_add(1))))
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
