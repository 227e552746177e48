use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent random domains derived from one experiment seed.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Domain {
    Node = 1,
    Initial = 2,
    GraphStep = 3,
    GraphCycle = 4,
    GraphPhase = 5,
}

fn mix(seed: u64, domain: Domain) -> u64 {
    // splitmix64 finaliser
    let mut z = seed ^ (domain as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A ChaCha stream keyed by `(seed, domain)` and indexed by `stream`.
///
/// The result depends only on the three arguments, never on call order.
pub(crate) fn stream(seed: u64, domain: Domain, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, domain));
    rng.set_stream(stream);
    rng
}
