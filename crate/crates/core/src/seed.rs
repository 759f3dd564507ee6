//! Seed derivation.
//!
//! A master seed fans out into child seeds by hashing labelled components
//! through SplitMix64:
//!
//! ```text
//! state = master
//! for each component c:
//!     state = splitmix64(state ^ fnv1a64(c))
//! ```
//!
//! so `derive(7, &["yeast5", "fold2", "smote"])` is stable across runs,
//! platforms and partial reruns. RNG streams are `ChaCha8Rng` seeded with the
//! derived value.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a64(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

pub fn derive(master: u64, components: &[&str]) -> u64 {
    components
        .iter()
        .fold(master, |state, c| splitmix64(state ^ fnv1a64(c)))
}

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
