//! Seeded random streams with deterministic splitting.
//!
//! Every randomized computation takes a [`Stream`]. Parallel work never
//! shares a generator: it forks a child key and derives one sub-stream per
//! batch index, so results do not depend on the worker count.

use rand_core::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::normal;

const FORK_TAG: u64 = 0x666f_726b_0000_0000;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Root seed plus the path of child indices that leads to a stream.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamKey {
    pub root: u64,
    pub path: Vec<u64>,
}

impl StreamKey {
    pub fn new(root: u64) -> Self {
        StreamKey { root, path: Vec::new() }
    }

    pub fn child(&self, index: u64) -> StreamKey {
        let mut path = self.path.clone();
        path.push(index);
        StreamKey { root: self.root, path }
    }

    fn seed(&self) -> u64 {
        let mut h = splitmix64(self.root);
        for &p in &self.path {
            h = splitmix64(h ^ splitmix64(p.wrapping_add(0x5851_f42d_4c95_7f2d)));
        }
        h
    }

    pub fn stream(&self) -> Stream {
        Stream {
            rng: Xoshiro256PlusPlus::seed_from_u64(self.seed()),
            key: self.clone(),
            forks: 0,
        }
    }
}

impl fmt::Display for StreamKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.root)?;
        for p in &self.path {
            if *p >= FORK_TAG {
                write!(f, "/f{}", p - FORK_TAG)?;
            } else {
                write!(f, "/{p}")?;
            }
        }
        Ok(())
    }
}

/// A reproducible random stream.
#[derive(Clone, Debug)]
pub struct Stream {
    rng: Xoshiro256PlusPlus,
    key: StreamKey,
    forks: u64,
}

impl Stream {
    pub fn from_seed(seed: u64) -> Self {
        StreamKey::new(seed).stream()
    }

    pub fn key(&self) -> &StreamKey {
        &self.key
    }

    /// Independent child stream addressed by `index` (does not advance `self`).
    pub fn child(&self, index: u64) -> Stream {
        self.key.child(index).stream()
    }

    /// Reserve a fresh key for a parallel section. Successive forks differ,
    /// so repeated calls on one stream never reuse randomness.
    pub fn fork(&mut self) -> StreamKey {
        let k = self.key.child(FORK_TAG + self.forks);
        self.forks += 1;
        k
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform on the open interval (0, 1), 53 bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard exponential.
    #[inline]
    pub fn exp1(&mut self) -> f64 {
        -self.uniform().ln()
    }

    /// Standard normal by inverse-CDF transform of one 64-bit draw.
    #[inline]
    pub fn normal(&mut self) -> f64 {
        normal::quantile(self.uniform())
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for x in out {
            *x = self.normal();
        }
    }

    /// Random sign, ±1.
    #[inline]
    pub fn sign(&mut self) -> f64 {
        if self.rng.next_u64() >> 63 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}
