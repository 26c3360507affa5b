//! Deterministic, splittable random streams.
//!
//! A [`Stream`] is a 256-bit key. Children are derived by mixing an index into
//! the key, so any consumer can be handed an independent substream addressed by
//! a path such as `(chain, iteration, replicate)` without coordinating with
//! anyone else. Each key seeds a ChaCha8 generator, a counter-based cipher, so
//! draws are reproducible across platforms and thread schedules.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Stream {
    key: [u64; 4],
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Stream {
    pub fn new(seed: u64) -> Self {
        let mut key = [0u64; 4];
        let mut s = seed;
        for (lane, k) in key.iter_mut().enumerate() {
            s = splitmix64(s ^ (lane as u64).wrapping_mul(0xD6E8_FEB8_6659_FD93));
            *k = s;
        }
        Stream { key }
    }

    /// Independent substream number `index`.
    pub fn child(&self, index: u64) -> Self {
        let mut key = [0u64; 4];
        let salt = splitmix64(index ^ 0xA076_1D64_78BD_642F);
        for (lane, k) in key.iter_mut().enumerate() {
            let rotated = self.key[(lane + 1) % 4].rotate_left(17 * lane as u32 + 7);
            *k = splitmix64(self.key[lane] ^ salt.wrapping_add(rotated) ^ (lane as u64));
        }
        Stream { key }
    }

    pub fn path(&self, indices: &[u64]) -> Self {
        indices.iter().fold(*self, |s, &i| s.child(i))
    }

    pub fn rng(&self) -> SimRng {
        let mut seed = [0u8; 32];
        for (chunk, k) in seed.chunks_exact_mut(8).zip(self.key) {
            chunk.copy_from_slice(&k.to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }
}
