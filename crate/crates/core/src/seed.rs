//! Deterministic random sub-streams.
//!
//! Every random draw in a run descends from one master seed. A sub-stream is
//! addressed by a component name and an index, so a component can be rerun in
//! isolation and reproduce exactly the numbers it produced inside a full run.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Derives the seed of sub-stream `(component, index)` from `master`.
pub fn derive(master: u64, component: &str, index: u64) -> u64 {
    splitmix64(splitmix64(master ^ fnv1a(component)) ^ splitmix64(index))
}

/// Generator for sub-stream `(component, index)` of `master`.
pub fn stream(master: u64, component: &str, index: u64) -> Rng {
    Rng::seed_from_u64(derive(master, component, index))
}
