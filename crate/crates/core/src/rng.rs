//! Counter-based random streams.
//!
//! Every Monte Carlo path draws from its own ChaCha8 stream, addressed by
//! `(key, path index)`. The key is derived from the user seed and a domain
//! label, so independent experiments in one run (tail curve, per-epoch
//! series, premium bridges) never share a stream. Results therefore depend
//! only on the seed and the path index, not on how paths are scheduled
//! across worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random stream handed to samplers.
pub type Stream = ChaCha8Rng;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A family of per-path streams sharing one key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamFamily {
    key: [u64; 4],
}

impl StreamFamily {
    pub fn new(seed: u64) -> Self {
        let mut state = seed;
        let key = [
            splitmix64(&mut state),
            splitmix64(&mut state),
            splitmix64(&mut state),
            splitmix64(&mut state),
        ];
        Self { key }
    }

    /// Derives an unrelated family for a sub-experiment.
    pub fn fork(&self, label: u64) -> Self {
        let mut state = self.key[0] ^ self.key[1].rotate_left(17) ^ label.wrapping_mul(0xD605_BBB5_8C8A_BBB5);
        let mut key = [0u64; 4];
        for (i, k) in key.iter_mut().enumerate() {
            *k = splitmix64(&mut state) ^ self.key[i];
        }
        Self { key }
    }

    /// Stream for path `index`.
    pub fn path(&self, index: u64) -> Stream {
        let mut seed = [0u8; 32];
        for (chunk, k) in seed.chunks_exact_mut(8).zip(self.key) {
            chunk.copy_from_slice(&k.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(index);
        rng
    }
}

/// Uniform on (0, 1], safe for `u.powf(-1/alpha)` and `ln(u)`.
#[inline]
pub fn open_unit<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}
