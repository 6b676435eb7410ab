//! Seeded random streams.
//!
//! Every random quantity in a run is drawn from a ChaCha8 stream keyed by
//! `(seed, domain)` and selected by a 64-bit stream index, so results do not
//! depend on thread scheduling or on the order in which work items finish.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Independent purposes a stream can serve within one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Topology = 1,
    RandomTheta = 2,
    HeuristicTheta = 3,
    LinkTrials = 4,
    MomentTrials = 5,
    QuarticTrials = 6,
    Instance = 7,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Derives a child seed, e.g. one per topology, from a parent seed.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

/// Stream `index` of the family keyed by `(seed, domain)`.
pub fn substream(seed: u64, domain: Domain, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, domain as u64));
    rng.set_stream(index);
    rng
}
