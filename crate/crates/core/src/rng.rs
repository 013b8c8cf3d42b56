//! Counter-based random streams.
//!
//! Every random quantity in the crate is addressed by a tuple of integers
//! (for a gain matrix: `(seed, row, column)`). The tuple is hashed into a
//! 64-bit key with the SplitMix64 finalizer, and the stream for that key is
//! `mix64(key + i · φ)` for `i = 0, 1, 2, …` where φ is the 64-bit golden
//! ratio increment. This is SplitMix64 started at the derived key, so a
//! draw depends only on its address, never on the order in which cells are
//! visited or on how work is split across threads.

use rand::rand_core::{impls, RngCore};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes an address tuple into a stream key.
pub fn derive_key(parts: &[u64]) -> u64 {
    parts.iter().fold(0x6A09_E667_F3BC_C909, |h, &p| {
        mix64(h.wrapping_add(GOLDEN) ^ mix64(p.wrapping_add(GOLDEN)))
    })
}

/// Per-run seed for `(base seed, alphabet size, repeat index)`.
pub fn run_seed(seed: u64, n: u64, repeat: u64) -> u64 {
    derive_key(&[seed, n, repeat])
}

/// Stream for one matrix cell.
pub fn cell_stream(seed: u64, row: u64, col: u64) -> CounterRng {
    CounterRng::new(derive_key(&[seed, row, col]))
}

#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(key: u64) -> Self {
        CounterRng { key, counter: 0 }
    }

    /// The `i`-th output of this stream without advancing it.
    pub fn at(&self, i: u64) -> u64 {
        mix64(self.key.wrapping_add(i.wrapping_add(1).wrapping_mul(GOLDEN)))
    }

    /// Uniform on the open interval (0, 1) with 53 bits of resolution.
    pub fn open01(&mut self) -> f64 {
        let bits = self.next_u64() >> 11;
        (bits as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }
}

impl RngCore for CounterRng {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        let out = self.at(self.counter);
        self.counter = self.counter.wrapping_add(1);
        out
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        impls::fill_bytes_via_next(self, dst)
    }
}
