use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Largest accepted values of each key component.
pub const MAX_ITERATION: u64 = (1 << 24) - 1;
pub const MAX_TREE: u64 = (1 << 16) - 2;
pub const MAX_SEGMENT: u64 = (1 << 8) - 1;
pub const MAX_PARTICLE: u64 = (1 << 16) - 3;

/// Reserved particle slots.
pub(crate) const RESAMPLE_SLOT: u64 = (1 << 16) - 1;
pub(crate) const FINAL_SLOT: u64 = (1 << 16) - 2;
/// Reserved tree slot for draws not tied to a tree.
pub(crate) const GLOBAL_TREE: u64 = (1 << 16) - 1;

/// Coordinates of an independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamKey {
    pub iteration: u64,
    pub tree: u64,
    pub segment: u64,
    pub particle: u64,
}

impl StreamKey {
    fn pack(&self) -> u64 {
        debug_assert!(self.iteration <= MAX_ITERATION && self.segment <= MAX_SEGMENT);
        (self.iteration << 40) | (self.tree << 24) | (self.segment << 16) | self.particle
    }
}

/// ChaCha stream for `key` under `seed`. Streams with distinct keys are
/// independent, so results do not depend on evaluation order.
pub fn substream(seed: u64, key: StreamKey) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(key.pack());
    rng
}
