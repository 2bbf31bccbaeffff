//! Reproducible uniform sampling on the torus.
//!
//! Every Monte Carlo draw is addressed by `(master seed, stream id)`, where
//! the stream id is the sample index, not the worker index. Workers own
//! disjoint ranges of sample indices, so results are bit-identical for any
//! worker count, and distinct streams never share counter state.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

use super::{BitFraction, TorusPoint};

/// Factory of per-sample random streams derived from one master seed.
#[derive(Debug, Clone, Copy)]
pub struct UniformStreams {
    key: [u8; 32],
}

impl UniformStreams {
    pub fn new(seed: u64) -> Self {
        // expand the 64-bit seed into a 256-bit key (splitmix chain)
        let mut key = [0u8; 32];
        let mut s = seed;
        for chunk in key.chunks_mut(8) {
            s = s.wrapping_add(0x9e3779b97f4a7c15);
            let mut z = s;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
            z ^= z >> 31;
            chunk.copy_from_slice(&z.to_le_bytes());
        }
        Self { key }
    }

    /// The counter-based generator for one stream id.
    pub fn stream(&self, id: u64) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::from_seed(self.key);
        rng.set_stream(id);
        rng
    }

    /// Uniform point of `T^dim` from stream `id`.
    pub fn point(&self, id: u64, dim: usize) -> TorusPoint {
        let mut rng = self.stream(id);
        self.point_from(&mut rng, dim)
    }

    /// Uniform point drawn from an already-open stream.
    pub fn point_from(&self, rng: &mut ChaCha12Rng, dim: usize) -> TorusPoint {
        TorusPoint::from_numerators((0..dim).map(|_| rng.next_u64()).collect())
    }

    /// Uniform 128-bit-per-coordinate state from an open stream.
    pub fn state128_from(&self, rng: &mut ChaCha12Rng, dim: usize) -> Vec<u128> {
        (0..dim)
            .map(|_| ((rng.next_u64() as u128) << 64) | rng.next_u64() as u128)
            .collect()
    }

    /// Uniform binary fraction of `bits` bits from stream `id`.
    pub fn bit_fraction(&self, id: u64, bits: usize) -> BitFraction {
        let mut rng = self.stream(id);
        self.bit_fraction_from(&mut rng, bits)
    }

    /// Uniform binary fraction drawn from an already-open stream.
    pub fn bit_fraction_from(&self, rng: &mut ChaCha12Rng, bits: usize) -> BitFraction {
        let words = (0..bits.div_ceil(64)).map(|_| rng.next_u64()).collect();
        BitFraction::from_words(words, bits).expect("word count matches requested bits")
    }

    /// Uniform `f64` in `[0, 1)` from an open stream.
    pub fn unit_from(&self, rng: &mut ChaCha12Rng) -> f64 {
        rng.gen::<f64>()
    }
}

/// Deterministic batch of uniform torus points, one stream per sample.
pub fn sample_points(seed: u64, dim: usize, count: usize) -> Vec<TorusPoint> {
    let streams = UniformStreams::new(seed);
    (0..count).map(|i| streams.point(i as u64, dim)).collect()
}

/// Deterministic batch of uniform binary fractions, one stream per sample.
pub fn sample_bit_fractions(seed: u64, bits: usize, count: usize) -> Vec<BitFraction> {
    let streams = UniformStreams::new(seed);
    (0..count)
        .map(|i| streams.bit_fraction(i as u64, bits))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let a = sample_points(7, 2, 100);
        let b = sample_points(7, 2, 100);
        assert_eq!(a, b);
    }

    #[test]
    fn distinct_streams_differ() {
        let s = UniformStreams::new(3);
        assert_ne!(s.point(0, 1), s.point(1, 1));
        assert_ne!(
            s.bit_fraction(10, 256).words(),
            s.bit_fraction(11, 256).words()
        );
    }

    #[test]
    fn top_bit_mean_is_half() {
        let pts = sample_points(42, 1, 100_000);
        let ones = pts
            .iter()
            .filter(|p| p.numerators()[0] >> 63 == 1)
            .count() as f64;
        let mean = ones / 1e5;
        // binomial: 5 sigma = 5 * 0.5 / sqrt(1e5) ~ 0.0079
        assert!((mean - 0.5).abs() < 0.008, "top-bit mean {mean}");
    }

    #[test]
    fn streams_are_independent_of_batching() {
        let s = UniformStreams::new(9);
        let direct = s.point(55, 3);
        let batch = sample_points(9, 3, 60);
        assert_eq!(batch[55], direct);
    }
}
