//! Schedule-independent random streams.
//!
//! Every stream is keyed by `(master seed, role, index)` through a
//! SplitMix64-style mixer, so the draws a replicate sees never depend on
//! which thread runs it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamRole {
    Data,
    Multipliers,
}

impl StreamRole {
    fn tag(self) -> u64 {
        match self {
            Self::Data => 0x6461_7461,        // "data"
            Self::Multipliers => 0x6d75_6c74, // "mult"
        }
    }
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(master: u64, role: StreamRole, index: u64) -> u64 {
    let h = mix(master.wrapping_add(GOLDEN));
    let h = mix(h ^ mix(role.tag().wrapping_add(GOLDEN)));
    mix(h ^ mix(index.wrapping_mul(GOLDEN).wrapping_add(1)))
}

pub fn stream_rng(master: u64, role: StreamRole, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, role, index))
}
