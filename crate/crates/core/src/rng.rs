//! Counter-based random streams.
//!
//! Every random draw in the crate comes from a [`StreamRng`] keyed by a
//! master seed and a small tuple of counters (column, row, attempt, ...).
//! The stream for a given key is the same no matter which thread asks for it
//! or in which order, so parallel loops produce identical output at any
//! thread count.

use rand::{Error, RngCore};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a stream key from a seed and an ordered list of counters.
#[inline]
pub fn derive_key(seed: u64, counters: &[u64]) -> u64 {
    counters
        .iter()
        .fold(mix64(seed ^ GOLDEN), |acc, &c| mix64(acc ^ mix64(c.wrapping_add(GOLDEN))))
}

/// SplitMix64 over `key + counter * GOLDEN`.
#[derive(Debug, Clone)]
pub struct StreamRng {
    key: u64,
    counter: u64,
}

impl StreamRng {
    pub fn new(seed: u64, counters: &[u64]) -> Self {
        StreamRng {
            key: derive_key(seed, counters),
            counter: 0,
        }
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Unbiased uniform index in `0..n`. `n` must be nonzero.
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        let n = n as u64;
        // Lemire's multiply-shift with rejection.
        let mut m = (self.next_u64() as u128) * (n as u128);
        if (m as u64) < n {
            let threshold = n.wrapping_neg() % n;
            while (m as u64) < threshold {
                m = (self.next_u64() as u128) * (n as u128);
            }
        }
        (m >> 64) as usize
    }
}

impl RngCore for StreamRng {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> Result<(), Error> {
        self.fill_bytes(dest);
        Ok(())
    }
}

/// Draws an index proportional to weights given as a cumulative sum.
pub fn draw_cumulative(rng: &mut StreamRng, cumulative: &[f64]) -> usize {
    let total = *cumulative.last().expect("empty cumulative weights");
    let u = rng.unit() * total;
    cumulative
        .partition_point(|&c| c <= u)
        .min(cumulative.len() - 1)
}

/// Running sums of `weights`.
pub fn cumulative(weights: impl IntoIterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .into_iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect()
}
