//! Counter-based uniform streams.
//!
//! Every stream is addressed by `(seed, iteration, unit, replicate)`. The key
//! is hashed into a 64-bit state, and the stream is the SplitMix64 sequence
//! started from it, so any draw can be produced without touching any other
//! stream. Not suitable for anything security related.

/// Default seed used by the CLI when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 20030402;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Address of one substream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    /// EM iteration producing the draws (1-based for MCEM).
    pub iteration: u64,
    /// Index of the unit within the sample.
    pub unit: u64,
    /// Monte Carlo replicate (1-based for MCEM).
    pub replicate: u64,
}

impl StreamKey {
    pub fn new(iteration: u64, unit: u64, replicate: u64) -> Self {
        Self {
            iteration,
            unit,
            replicate,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RandomStream {
    state: u64,
}

impl RandomStream {
    pub fn new(seed: u64, key: StreamKey) -> Self {
        let mut h = mix64(seed ^ 0x243F_6A88_85A3_08D3);
        h = mix64(h ^ key.iteration.wrapping_mul(0xD6E8_FEB8_6659_FD93));
        h = mix64(h ^ key.unit.wrapping_mul(0xA076_1D64_78BD_642F));
        h = mix64(h ^ key.replicate.wrapping_mul(0xE703_7ED1_A0B4_28DB));
        Self { state: h }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform draw strictly inside (0, 1): `(⌊x / 2¹²⌋ + ½) / 2⁵²`.
    #[inline]
    pub fn next_uniform(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / (1u64 << 52) as f64;
        ((self.next_u64() >> 12) as f64 + 0.5) * SCALE
    }
}

/// First uniform of the stream at `key`; the common case for MCEM where each
/// replicate consumes exactly one draw.
#[inline]
pub fn uniform_at(seed: u64, key: StreamKey) -> f64 {
    RandomStream::new(seed, key).next_uniform()
}
