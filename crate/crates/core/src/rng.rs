//! Reproducible random streams.
//!
//! Every experiment point draws from its own ChaCha stream keyed by
//! `(seed, experiment id)` with the point index as stream number, so results do
//! not depend on how work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::torus::TorusPoint;

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for point `index` of experiment `experiment` under global `seed`.
pub fn stream(seed: u64, experiment: &str, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix(seed ^ splitmix(fnv1a(experiment))));
    rng.set_stream(index);
    rng
}

/// `n` volume-random points, point `i` drawn from stream `i`.
pub fn random_points(seed: u64, experiment: &str, n: usize) -> Vec<TorusPoint> {
    (0..n).map(|i| TorusPoint::random(&mut stream(seed, experiment, i as u64))).collect()
}
