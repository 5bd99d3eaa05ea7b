//! Deterministic random substreams.
//!
//! Every random draw in a trial comes from a stream derived from
//! `(seed, trial, purpose)`, so results do not depend on how trials are
//! scheduled across workers. Network and fading draws are keyed without the
//! variant, which makes variant comparisons paired.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// What a substream is used for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    /// AP/UE placement and shadowing.
    Network,
    /// Small-scale fading.
    Fading,
    /// Pilot phases and pilot assignment of a variant.
    Pilots(u32),
    /// UPNG data symbols and optional link phases of a variant.
    Data(u32),
    /// Receiver noise of a variant.
    Noise(u32),
    /// Anything else a caller wants isolated.
    Aux(u32),
}

impl Stream {
    fn tag(self) -> u64 {
        let (kind, id) = match self {
            Stream::Network => (1u64, 0u32),
            Stream::Fading => (2, 0),
            Stream::Pilots(id) => (3, id),
            Stream::Data(id) => (4, id),
            Stream::Noise(id) => (5, id),
            Stream::Aux(id) => (6, id),
        };
        (kind << 32) | u64::from(id)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of the substream for `(seed, trial, stream)`.
pub fn substream_seed(seed: u64, trial: u64, stream: Stream) -> u64 {
    let h = splitmix64(seed);
    let h = splitmix64(h ^ trial.wrapping_mul(0xd6e8_feb8_6659_fd93));
    splitmix64(h ^ stream.tag())
}

pub fn substream(seed: u64, trial: u64, stream: Stream) -> SimRng {
    SimRng::seed_from_u64(substream_seed(seed, trial, stream))
}
