//! Labelled, splittable random streams.
//!
//! Every draw in a simulation comes from an [`RngStream`] whose identity is a
//! 64-bit seed plus a path of labels (scenario, sweep index, iteration, ...).
//! The same seed and path always produce the same sequence, independent of
//! which thread consumes it or in what order streams are created.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable 64-bit FNV-1a hash, used to turn textual labels into stream labels.
pub fn label_hash(text: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

/// A reproducible random stream identified by a seed and a label path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    seed: u64,
    state: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            state: splitmix64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Child stream for `label`. Children of distinct labels are independent.
    pub fn derive(&self, label: u64) -> Self {
        Self {
            seed: self.seed,
            state: splitmix64(self.state ^ splitmix64(label.wrapping_add(GOLDEN))),
        }
    }

    pub fn derive_str(&self, label: &str) -> Self {
        self.derive(label_hash(label))
    }

    /// Materialise the generator for this stream.
    pub fn rng(&self) -> ChaCha12Rng {
        let mut key = [0u8; 32];
        let mut s = self.state;
        for chunk in key.chunks_mut(8) {
            s = splitmix64(s);
            chunk.copy_from_slice(&s.to_le_bytes());
        }
        ChaCha12Rng::from_seed(key)
    }
}
