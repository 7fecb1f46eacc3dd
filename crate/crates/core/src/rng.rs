//! Seeded, splittable random number generation.
//!
//! Every generator is a ChaCha8 stream cipher keyed by a 64-bit seed
//! (expanded to a 256-bit key with `rand_core`'s PCG32 `seed_from_u64`) and
//! positioned on a 64-bit stream id. Substreams are addressed by mixing a
//! parent stream id with a label through FNV-1a (64-bit) followed by the
//! SplitMix64 finalizer. ChaCha8 output is defined bit-for-bit independent
//! of platform and endianness, so the same `(seed, stream_id)` pair yields
//! the same sequence everywhere.

use rand::seq::SliceRandom;
use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// FNV-1a over the UTF-8 bytes of `label`.
pub fn fnv1a64(label: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in label.bytes() {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Probability distribution for [`Rng::fill`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dist {
    Uniform { lo: f64, hi: f64 },
    Normal { mean: f64, std: f64 },
}

impl Dist {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Dist::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite()) || lo > hi {
                    return Err(Error::InvalidDistribution(format!(
                        "uniform({lo}, {hi}) requires finite lo <= hi"
                    )));
                }
            }
            Dist::Normal { mean, std } => {
                if !(mean.is_finite() && std.is_finite()) || std < 0.0 {
                    return Err(Error::InvalidDistribution(format!(
                        "normal({mean}, {std}) requires finite mean and std >= 0"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Rng {
    inner: ChaCha8Rng,
    seed: u64,
    stream_id: u64,
}

impl Rng {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Rng {
            inner,
            seed,
            stream_id,
        }
    }

    /// Generator on the stream named by `label`.
    pub fn named(seed: u64, label: &str) -> Self {
        Rng::new(seed, splitmix64(fnv1a64(label)))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Fresh generator on a child stream. Independent of how many values
    /// have already been drawn from `self`.
    pub fn substream(&self, label: &str) -> Rng {
        Rng::new(
            self.seed,
            splitmix64(self.stream_id.rotate_left(17) ^ fnv1a64(label)),
        )
    }

    pub fn substream_index(&self, index: u64) -> Rng {
        Rng::new(
            self.seed,
            splitmix64(self.stream_id.rotate_left(17) ^ splitmix64(index)),
        )
    }

    /// Uniform in `[lo, hi)`; exactly `lo` when `lo == hi`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u: f64 = self.inner.random();
        lo + (hi - lo) * u
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    pub fn normal(&mut self, mean: f64, std: f64) -> f64 {
        mean + std * self.standard_normal()
    }

    pub fn sample(&mut self, dist: Dist) -> f64 {
        match dist {
            Dist::Uniform { lo, hi } => self.uniform(lo, hi),
            Dist::Normal { mean, std } => self.normal(mean, std),
        }
    }

    pub fn fill(&mut self, out: &mut [f64], dist: Dist) -> Result<()> {
        dist.validate()?;
        for v in out.iter_mut() {
            *v = self.sample(dist);
        }
        Ok(())
    }

    /// Uniform integer in `lo..=hi`.
    pub fn int_in(&mut self, lo: usize, hi: usize) -> usize {
        self.inner.random_range(lo..=hi)
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        items.shuffle(&mut self.inner);
    }

    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..n).collect();
        self.shuffle(&mut idx);
        idx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_reference_values() {
        assert_eq!(fnv1a64(""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a64("a"), 0xaf63_dc4c_8601_ec8c);
    }

    #[test]
    fn same_seed_same_stream() {
        let mut a = Rng::named(7, "init");
        let mut b = Rng::named(7, "init");
        for _ in 0..100 {
            assert_eq!(a.standard_normal().to_bits(), b.standard_normal().to_bits());
        }
    }

    #[test]
    fn streams_differ() {
        let mut a = Rng::named(7, "init");
        let mut b = Rng::named(7, "shuffle");
        let xs: Vec<f64> = (0..8).map(|_| a.uniform(0.0, 1.0)).collect();
        let ys: Vec<f64> = (0..8).map(|_| b.uniform(0.0, 1.0)).collect();
        assert_ne!(xs, ys);
    }

    #[test]
    fn substream_ignores_parent_position() {
        let parent = Rng::new(3, 11);
        let mut advanced = parent.clone();
        advanced.uniform(0.0, 1.0);
        let mut s1 = parent.substream_index(4);
        let mut s2 = advanced.substream_index(4);
        assert_eq!(s1.uniform(0.0, 1.0), s2.uniform(0.0, 1.0));
    }

    #[test]
    fn degenerate_distributions() {
        let mut rng = Rng::new(1, 0);
        let mut buf = vec![9.0; 32];
        rng.fill(&mut buf, Dist::Normal { mean: 0.0, std: 0.0 }).unwrap();
        assert!(buf.iter().all(|&v| v == 0.0));
        rng.fill(&mut buf, Dist::Uniform { lo: 1.0, hi: 1.0 }).unwrap();
        assert!(buf.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn invalid_distributions() {
        let mut rng = Rng::new(1, 0);
        let mut buf = vec![0.0; 4];
        assert!(rng.fill(&mut buf, Dist::Normal { mean: 0.0, std: -1.0 }).is_err());
        assert!(rng.fill(&mut buf, Dist::Uniform { lo: 2.0, hi: 1.0 }).is_err());
        assert!(rng.fill(&mut buf, Dist::Uniform { lo: f64::NAN, hi: 1.0 }).is_err());
    }

    #[test]
    fn uniform_mean_over_a_million_draws() {
        let mut rng = Rng::named(42, "mean-check");
        let n = 1_000_000;
        let sum: f64 = (0..n).map(|_| rng.uniform(-1.0, 1.0)).sum();
        assert!((sum / n as f64).abs() < 0.01);
    }

    #[test]
    fn permutation_is_a_permutation() {
        let mut rng = Rng::new(5, 5);
        let mut p = rng.permutation(100);
        p.sort_unstable();
        assert_eq!(p, (0..100).collect::<Vec<_>>());
    }
}
