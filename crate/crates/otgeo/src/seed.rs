//! Deterministic randomness.
//!
//! Every random quantity in the crate is drawn from a [`Rng`] created from a
//! [`SeedSpec`]: a 64-bit master seed plus a stream id. Identical specs yield
//! bit-identical sample sequences; distinct stream ids yield independent
//! streams of the same master seed, so parallel consumers never share a
//! stream.

use crate::error::{Error, Result};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// A reproducible random stream label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl SeedSpec {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        SeedSpec {
            master_seed,
            stream_id,
        }
    }

    /// Derive a child stream (bags, repeats, per-config frames). The salt is
    /// mixed through SplitMix64 so nearby ids do not collide with user ids.
    pub fn derived(&self, salt: u64) -> SeedSpec {
        SeedSpec {
            master_seed: self.master_seed,
            stream_id: splitmix64(self.stream_id ^ splitmix64(salt)),
        }
    }

    pub fn rng(&self) -> Rng {
        let mut chacha = ChaCha8Rng::seed_from_u64(self.master_seed);
        chacha.set_stream(self.stream_id);
        Rng {
            inner: chacha,
            normal_cache: None,
        }
    }
}

/// Support/MC seed pair for the two-stream estimators. The constructor
/// rejects identical streams: the concentration bounds require the Monte
/// Carlo stream to be independent of the support draw.
#[derive(Debug, Clone, Copy)]
pub struct SeedPair {
    pub support: SeedSpec,
    pub mc: SeedSpec,
}

impl SeedPair {
    pub fn new(support: SeedSpec, mc: SeedSpec) -> Result<Self> {
        if support == mc {
            return Err(Error::SharedSeedStream);
        }
        Ok(SeedPair { support, mc })
    }

    /// Conventional pair: streams `base` and `base + 1` of the same master.
    pub fn from_master(master_seed: u64) -> Self {
        SeedPair {
            support: SeedSpec::new(master_seed, 0),
            mc: SeedSpec::new(master_seed, 1),
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// ChaCha8-backed stream with the scalar draws the generators need.
///
/// The float conversions are fixed here rather than delegated to a
/// distributions crate so the byte-level output is pinned by this crate
/// alone.
pub struct Rng {
    inner: ChaCha8Rng,
    normal_cache: Option<f64>,
}

impl Rng {
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in [0, 1) with 53 random bits.
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in (0, 1]; safe as a log argument.
    pub fn uniform_open(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box-Muller (cached second value).
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.normal_cache.take() {
            return z;
        }
        let u1 = self.uniform_open();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.normal_cache = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Unbiased uniform integer in [0, bound) by rejection.
    pub fn below(&mut self, bound: usize) -> usize {
        assert!(bound > 0, "below(0)");
        let bound = bound as u64;
        let zone = u64::MAX - (u64::MAX % bound);
        loop {
            let v = self.inner.next_u64();
            if v < zone {
                return (v % bound) as usize;
            }
        }
    }

    /// Seeded permutation of 0..n (Fisher-Yates).
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = self.below(i + 1);
            idx.swap(i, j);
        }
        idx
    }

    /// k distinct indices from 0..n, without replacement (partial
    /// Fisher-Yates). Order is the draw order.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n, "sample_indices: k > n");
        let mut idx: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.below(n - i);
            idx.swap(i, j);
        }
        idx.truncate(k);
        idx
    }

    /// Categorical draw from cumulative proportions (last entry must be ~1).
    pub fn categorical(&mut self, cumulative: &[f64]) -> usize {
        let u = self.uniform();
        for (i, &c) in cumulative.iter().enumerate() {
            if u < c {
                return i;
            }
        }
        cumulative.len() - 1
    }
}
