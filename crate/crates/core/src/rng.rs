//! Seeded randomness.
//!
//! `SeededRng` is ChaCha8 (as implemented by `rand_chacha` 0.3) keyed by
//! `seed_from_u64(seed)` and positioned on a numbered stream. The mapping
//! `(seed, stream) -> output` is stable and is part of the replay format:
//! stream 0 drives delivery scheduling, streams `1..=n` drive each agent's
//! shares and stream `n + 1` drives gossip.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::residue::{Modulus, Residue};

#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    stream: u64,
    inner: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        SeededRng { seed, stream, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform integer in `[0, bound)`, by rejection over the smallest
    /// power-of-two range covering `bound`. Exact, with no modulo bias.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "empty range");
        if bound == 1 {
            return 0;
        }
        let bits = 64 - (bound - 1).leading_zeros();
        let mask = if bits == 64 { u64::MAX } else { (1u64 << bits) - 1 };
        loop {
            let x = self.inner.next_u64() & mask;
            if x < bound {
                return x;
            }
        }
    }

    /// Uniform integer in `[lo, hi]`.
    pub fn range_inclusive(&mut self, lo: u64, hi: u64) -> u64 {
        assert!(lo <= hi);
        lo + self.below(hi - lo + 1)
    }

    pub fn uniform_residue(&mut self, p: Modulus) -> Residue {
        p.reduce(self.below(p.get()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn same_seed_same_sequence() {
        let p = Modulus::new(30).unwrap();
        let draw = |seed| {
            let mut rng = SeededRng::new(seed);
            (0..6).map(|_| rng.uniform_residue(p).value()).collect::<Vec<_>>()
        };
        let first = draw(0xC0FFEE);
        assert_eq!(first, draw(0xC0FFEE));
        assert!(first.iter().all(|&v| v < 30));
        assert_ne!(first, draw(0xC0FFEF));
    }

    #[test]
    fn output_is_stable_across_releases() {
        // Frozen from the first run; replay files depend on this mapping.
        let mut rng = SeededRng::with_stream(42, 3);
        let p = Modulus::new(30).unwrap();
        let got: Vec<u64> = (0..6).map(|_| rng.uniform_residue(p).value()).collect();
        assert_eq!(got, FROZEN_42_3);
    }

    const FROZEN_42_3: [u64; 6] = [9, 4, 0, 8, 29, 28];

    #[test]
    fn streams_are_independent() {
        let mut a = SeededRng::with_stream(7, 1);
        let mut b = SeededRng::with_stream(7, 2);
        let xa: Vec<u64> = (0..4).map(|_| a.next_u64()).collect();
        let xb: Vec<u64> = (0..4).map(|_| b.next_u64()).collect();
        assert_ne!(xa, xb);
    }

    #[test]
    fn fair_coin() {
        let p = Modulus::new(2).unwrap();
        let mut rng = SeededRng::new(2024);
        let ones: u64 = (0..10_000).map(|_| rng.uniform_residue(p).value()).sum();
        let freq = ones as f64 / 10_000.0;
        assert!((0.45..=0.55).contains(&freq), "freq {freq}");
    }

    #[test]
    fn five_way_uniformity_chi_square() {
        let p = Modulus::new(5).unwrap();
        let mut rng = SeededRng::new(99);
        let mut counts = [0u64; 5];
        let draws = 50_000;
        for _ in 0..draws {
            counts[rng.uniform_residue(p).value() as usize] += 1;
        }
        let expected = draws as f64 / 5.0;
        let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        let crit = ChiSquared::new(4.0).unwrap().inverse_cdf(0.999);
        assert!(stat < crit, "chi2 {stat} >= {crit}");
    }

    #[test]
    fn below_handles_extremes() {
        let mut rng = SeededRng::new(1);
        assert_eq!(rng.below(1), 0);
        for _ in 0..100 {
            assert!(rng.below(3) < 3);
            rng.below(u64::MAX);
        }
        assert!((5..=9).contains(&rng.range_inclusive(5, 9)));
    }
}
