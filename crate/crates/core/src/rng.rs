//! Seed derivation and Gaussian draws.
//!
//! Every random object is generated from its own `ChaCha8Rng` whose seed is derived
//! from a base seed and a tuple of counters, so results do not depend on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::signal::Field;
use crate::C64;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent child seed from `base` and a path of counters.
pub fn split_seed(base: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(splitmix64(base), |acc, &p| splitmix64(acc ^ splitmix64(p.wrapping_add(0x632B_E59B_D9B4_E019))))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One draw with total variance `variance`; the complex case splits it evenly
/// between the real and imaginary parts.
pub fn gaussian<R: Rng + ?Sized>(rng: &mut R, field: Field, variance: f64) -> C64 {
    match field {
        Field::Real => {
            let g: f64 = rng.sample(StandardNormal);
            C64::new(g * variance.sqrt(), 0.0)
        }
        Field::Complex => {
            let sd = (variance / 2.0).sqrt();
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(re * sd, im * sd)
        }
    }
}
