//! Counter-based, splittable random streams.
//!
//! A stream is addressed by `(seed, stream_id)`; its output is a ChaCha8
//! keystream, so any draw is a pure function of the seed, the stream id and
//! the draw position. Work that runs in parallel gets its own substream
//! (one per image row, per noise component, ...) so results never depend on
//! thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

/// Substream labels used by the synthesis pipeline.
pub mod tags {
    pub const FACTOR: u64 = 0x1;
    pub const PARAMS: u64 = 0x2;
    pub const NOISE: u64 = 0x3;
    pub const SHOT: u64 = 0x10;
    pub const READ: u64 = 0x11;
    pub const ROW: u64 = 0x12;
    pub const QUANT: u64 = 0x13;
    pub const SUBSAMPLE: u64 = 0x20;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub const fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Deterministically derive a child stream for `index`.
    ///
    /// Children of distinct indices (and of distinct parents) get distinct
    /// stream ids with overwhelming probability.
    pub fn substream(&self, index: u64) -> Self {
        let mixed = splitmix64(self.stream_id ^ splitmix64(index.wrapping_add(0xD1B5_4A32_D192_ED03)));
        Self {
            seed: self.seed,
            stream_id: mixed,
        }
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Generator positioned at 32-bit word `word_pos` of this stream.
    pub fn rng_at(&self, word_pos: u128) -> ChaCha8Rng {
        let mut rng = self.rng();
        rng.set_word_pos(word_pos);
        rng
    }
}
