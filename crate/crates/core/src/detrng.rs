//! Hierarchical deterministic random streams.
//!
//! Every random draw in the benchmark comes from a [`StreamState`] resolved
//! from a [`SeedPath`] such as
//! `[("digits-hybrid", 0), ("split", 2026), ("model", 23), ("encode-train", 0), ("epoch", 4), ("sample", 911)]`.
//! The generator is splitmix64, which is also used as the child-derivation
//! finalizer, so streams are platform independent and cheap to fork.

use crate::error::{Error, Result};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// FNV-1a 64-bit hash of a UTF-8 label.
pub fn hash_label(label: &str) -> u64 {
    label
        .bytes()
        .fold(FNV_OFFSET, |h, b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// splitmix64 output finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A splitmix64 stream. Value type: copying it forks an identical stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamState {
    pub state: u64,
}

impl StreamState {
    pub fn new(state: u64) -> Self {
        Self { state }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform draw in `[0, 1)` with 53 bits of resolution.
    #[inline]
    pub fn next_uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// `true` with probability `p`.
    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> Result<bool> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidProbability(p));
        }
        Ok(self.next_uniform() < p)
    }

    /// Uniform integer in `0..n` (`n > 0`).
    #[inline]
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.next_uniform() * n as f64) as usize).min(n - 1)
    }

    /// Fisher–Yates permutation of `0..n`.
    pub fn shuffle(&mut self, n: usize) -> Vec<usize> {
        let mut perm: Vec<usize> = (0..n).collect();
        self.shuffle_in_place(&mut perm);
        perm
    }

    pub fn shuffle_in_place<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }

    pub fn child(&self, index: u64) -> StreamState {
        derive_child(self.state, index)
    }

    /// One labeled step down a seed path.
    pub fn descend(&self, label: &str, index: u64) -> StreamState {
        derive_child(self.state ^ hash_label(label), index)
    }
}

/// Child stream `index` of `parent`.
#[inline]
pub fn derive_child(parent: u64, index: u64) -> StreamState {
    StreamState::new(mix64(parent ^ index.wrapping_add(1).wrapping_mul(GOLDEN_GAMMA)))
}

/// Ordered `(label, index)` pairs naming one stream.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SeedPath {
    labels: Vec<(String, u64)>,
}

impl SeedPath {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn root(label: impl Into<String>, index: u64) -> Self {
        Self::new().push(label, index)
    }

    #[must_use]
    pub fn push(mut self, label: impl Into<String>, index: u64) -> Self {
        self.labels.push((label.into(), index));
        self
    }

    pub fn labels(&self) -> &[(String, u64)] {
        &self.labels
    }

    pub fn resolve(&self) -> StreamState {
        self.labels
            .iter()
            .fold(StreamState::new(0), |s, (label, idx)| s.descend(label, *idx))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn fnv1a_reference(bytes: &[u8]) -> u64 {
        let mut h: u64 = 14695981039346656037;
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(1099511628211);
        }
        h
    }

    #[test]
    fn fnv_vectors() {
        assert_eq!(hash_label(""), 0xcbf29ce484222325);
        // Published FNV-1a 64 test vector.
        assert_eq!(hash_label("a"), 0xaf63dc4c8601ec8c);
        assert_eq!(hash_label("a"), fnv1a_reference(b"a"));
        assert_eq!(hash_label("foobar"), 0x85944171f73967e8);
        assert_eq!(hash_label("digits"), hash_label("digits"));
    }

    #[test]
    fn splitmix_reference_sequence() {
        // Reference outputs of splitmix64 seeded with 0.
        let mut s = StreamState::new(0);
        assert_eq!(s.next_u64(), 0xe220a8397b1dcdaf);
        assert_eq!(s.next_u64(), 0x6e789e6aa1b965f4);
        assert_eq!(s.next_u64(), 0x06c45d188009454f);
    }

    #[test]
    fn children_distinct_and_stable() {
        let p = hash_label("test");
        assert_ne!(derive_child(p, 0), derive_child(p, 1));
        assert_eq!(derive_child(p, 7), derive_child(p, 7));
        let mut seen = HashSet::with_capacity(1_000_001);
        for i in 0..=1_000_000u64 {
            assert!(seen.insert(derive_child(p, i).state), "collision at {i}");
        }
    }

    #[test]
    fn uniform_range_and_mean() {
        let mut s = SeedPath::root("uniform", 0).resolve();
        let n = 1_000_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let u = s.next_uniform();
            assert!((0.0..1.0).contains(&u));
            sum += u;
        }
        // 3 sigma of the mean of U(0,1): 3 * sqrt(1/12) / 1000 ≈ 0.00087
        assert!((sum / n as f64 - 0.5).abs() < 0.002);
    }

    #[test]
    fn uniform_deterministic() {
        let a = StreamState::new(42);
        let (mut x, mut y) = (a, a);
        assert_eq!(x.next_uniform(), y.next_uniform());
    }

    #[test]
    fn bernoulli_edges_and_rate() {
        let mut s = StreamState::new(9);
        for _ in 0..1000 {
            assert!(!s.bernoulli(0.0).unwrap());
            assert!(s.bernoulli(1.0).unwrap());
        }
        assert!(s.bernoulli(1.5).is_err());
        assert!(s.bernoulli(-0.1).is_err());
        assert!(s.bernoulli(f64::NAN).is_err());
        let n = 1_000_000;
        let hits = (0..n).filter(|_| s.bernoulli(0.2).unwrap()).count();
        let rate = hits as f64 / n as f64;
        assert!((rate - 0.2).abs() <= 0.0012, "rate {rate}");
    }

    #[test]
    fn bernoulli_frequency_within_three_sigma() {
        let n = 100_000;
        for (i, &p) in [0.01, 0.1, 0.2, 0.5, 0.75, 0.99].iter().enumerate() {
            let mut s = SeedPath::root("bernoulli", i as u64).resolve();
            let hits = (0..n).filter(|_| s.bernoulli(p).unwrap()).count();
            let bound = 3.0 * (p * (1.0 - p) / n as f64).sqrt();
            assert!((hits as f64 / n as f64 - p).abs() <= bound, "p={p}");
        }
    }

    #[test]
    fn shuffle_small_cases() {
        let mut s = StreamState::new(3);
        assert!(s.shuffle(0).is_empty());
        assert_eq!(s.shuffle(1), vec![0]);
        let a = StreamState::new(77).shuffle(10);
        let b = StreamState::new(77).shuffle(10);
        assert_eq!(a, b);
        assert_ne!(a, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn seed_path_resolution_is_pure() {
        let path = SeedPath::root("digits-hybrid", 0)
            .push("split", 2026)
            .push("model", 23)
            .push("epoch", 4)
            .push("sample", 911);
        assert_eq!(path.resolve(), path.clone().resolve());
        let other = SeedPath::root("digits-hybrid", 0)
            .push("split", 2026)
            .push("model", 23)
            .push("epoch", 4)
            .push("sample", 912);
        assert_ne!(path.resolve(), other.resolve());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn shuffle_is_permutation(seed in any::<u64>(), n in 0usize..300) {
                let mut perm = StreamState::new(seed).shuffle(n);
                perm.sort_unstable();
                prop_assert_eq!(perm, (0..n).collect::<Vec<_>>());
            }
        }
    }
}
