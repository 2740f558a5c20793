//! Seed derivation. Every random component of a run draws from its own
//! ChaCha stream keyed by `(master seed, partition, component name)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// FNV-1a over the component name, mixed with the master seed and index.
pub fn derive(master: u64, index: u64, component: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in component.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(splitmix64(master ^ h).wrapping_add(splitmix64(index)))
}

pub fn rng(master: u64, index: u64, component: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(master, index, component))
}

/// Uniform draw in [0, 1) that depends only on `(seed, key)`.
pub fn unit_uniform(seed: u64, key: u64) -> f64 {
    (derive(seed, key, "uniform") >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
