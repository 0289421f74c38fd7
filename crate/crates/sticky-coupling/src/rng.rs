//! Per-path random streams.
//!
//! Each path owns a ChaCha8 generator keyed by the run seed and positioned on
//! the stream given by its path index, so the draws of a path never depend on
//! which worker runs it or in what order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Recorded in every manifest.
pub const RNG_ALGORITHM: &str =
    "chacha8/seed_from_u64+stream(path_index);normal=rand_distr::StandardNormal(ziggurat);sign=u64-bit-buffer";

pub struct IncrementStream {
    rng: ChaCha8Rng,
    bits: u64,
    left: u32,
}

impl IncrementStream {
    pub fn new(seed: u64, path_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(path_index);
        IncrementStream { rng, bits: 0, left: 0 }
    }

    /// Standard normal draw.
    #[inline]
    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Fair ±1.
    #[inline]
    pub fn sign(&mut self) -> f64 {
        if self.left == 0 {
            self.bits = self.rng.random::<u64>();
            self.left = 64;
        }
        let b = self.bits & 1;
        self.bits >>= 1;
        self.left -= 1;
        if b == 1 {
            1.0
        } else {
            -1.0
        }
    }
}

/// Stream for `(seed, path_index)`.
pub fn rng_contract(seed: u64, path_index: u64) -> IncrementStream {
    IncrementStream::new(seed, path_index)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_key_same_stream() {
        let mut a = rng_contract(7, 3);
        let mut b = rng_contract(7, 3);
        for _ in 0..100 {
            assert_eq!(a.normal().to_bits(), b.normal().to_bits());
            assert_eq!(a.sign(), b.sign());
        }
    }

    #[test]
    fn neighbouring_paths_differ() {
        let x = rng_contract(7, 3).normal();
        let y = rng_contract(7, 4).normal();
        assert_ne!(x, y);
        assert_ne!(rng_contract(7, 3).normal(), rng_contract(8, 3).normal());
    }

    #[test]
    fn normal_mean_within_clt() {
        let mut s = rng_contract(1, 0);
        let n = 1_000_000;
        let mean = (0..n).map(|_| s.normal()).sum::<f64>() / n as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt());
        let signs = (0..n).map(|_| s.sign()).sum::<f64>() / n as f64;
        assert!(signs.abs() < 4.0 / (n as f64).sqrt());
    }
}
