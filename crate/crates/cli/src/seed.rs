//! Case seeds: `splitmix64(fnv1a(case id) ^ root)` feeding a ChaCha8 stream.
//! Both hashes are fixed by algorithm so any implementation reproduces them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const DEFAULT_SEED: u64 = 20_211_030;

/// 64-bit FNV-1a.
pub fn fnv1a(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// The SplitMix64 finalizer applied to `x + γ`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn case_seed(root: u64, case_id: &str) -> u64 {
    splitmix64(fnv1a(case_id) ^ root)
}

pub fn case_rng(root: u64, case_id: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(case_seed(root, case_id))
}
