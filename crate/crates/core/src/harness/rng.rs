use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Counter-based substreams: the generator for `(tag, index)` depends only
/// on the master seed, so trials may run in any order on any worker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    seed: u64,
}

pub const TAG_NOISE_H0: u64 = 1;
pub const TAG_NOISE_H1: u64 = 2;
pub const TAG_SOURCES: u64 = 3;
pub const TAG_ORACLE: u64 = 4;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn substream(&self, tag: u64, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(self.seed ^ splitmix64(tag)));
        rng.set_stream(index);
        rng
    }
}
