//! Counter-based splittable seed streams.
//!
//! A [`SeedStream`] is a 64-bit key. Child streams are derived by mixing the
//! key with a tag through SplitMix64, and replication `i` of a stream draws
//! from ChaCha8 keyed by the stream key with stream id `i`. A replication's
//! randomness therefore depends only on `(root seed, path of tags, i)`, never
//! on scheduling or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedStream {
    key: u64,
}

/// SplitMix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// FNV-1a, used to turn labels into stream tags.
fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

impl SeedStream {
    pub fn new(root: u64) -> Self {
        Self {
            key: splitmix64(root),
        }
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    pub fn split(&self, tag: u64) -> Self {
        Self {
            key: splitmix64(self.key ^ splitmix64(tag.wrapping_add(0x5851_f42d_4c95_7f2d))),
        }
    }

    pub fn split_label(&self, label: &str) -> Self {
        self.split(fnv1a(label.as_bytes()))
    }

    /// Generator for replication `index`.
    pub fn rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.key);
        rng.set_stream(index);
        rng
    }
}
