//! The evaluated learners: a delta-rule softmax readout and a competitive
//! prototype learner, plus the stream plumbing they share.

pub mod proxy;
pub mod readout;

use rayon::prelude::*;

use crate::data::Dataset;
use crate::detrng::{SeedPath, StreamState};
use crate::encoding::{encode_counts, EncoderConfig};
use crate::error::Result;
use crate::scalar::Scalar;

/// Random streams of one `(family, split seed, model seed)` run.
///
/// Layout: family → split → model → purpose → epoch → sample.
#[derive(Debug, Clone)]
pub struct RunStreams {
    path: SeedPath,
    base: StreamState,
}

impl RunStreams {
    pub fn new(family: &str, split_seed: u64, model_seed: u64) -> Self {
        let path = SeedPath::root(family, 0).push("split", split_seed).push("model", model_seed);
        let base = path.resolve();
        Self { path, base }
    }

    pub fn path(&self) -> &SeedPath {
        &self.path
    }

    fn purpose(&self, purpose: &str, epoch: u64) -> StreamState {
        self.base.descend(purpose, 0).descend("epoch", epoch)
    }

    pub fn train_order(&self, epoch: u64) -> StreamState {
        self.purpose("train-order", epoch)
    }

    /// Parent of the per-sample training encoding streams for `epoch`.
    pub fn encode_train(&self, epoch: u64) -> StreamState {
        self.purpose("encode-train", epoch)
    }

    /// Parent of the per-sample test encoding streams (one fixed draw).
    pub fn encode_test(&self) -> StreamState {
        self.purpose("encode-test", 0)
    }

    pub fn init(&self) -> StreamState {
        self.purpose("init", 0)
    }
}

/// Stream for one sample under an encoding parent.
pub fn sample_stream(parent: &StreamState, sample: usize) -> StreamState {
    parent.descend("sample", sample as u64)
}

/// Spike-count vectors of the listed samples, one stream per dataset index.
pub fn encode_rates<T: Scalar>(
    ds: &Dataset<T>,
    indices: &[usize],
    enc: &EncoderConfig<T>,
    parent: &StreamState,
) -> Result<Vec<Vec<T>>> {
    indices
        .par_iter()
        .map(|&i| {
            let mut s = sample_stream(parent, i);
            let counts = encode_counts(ds.sample(i), enc, &mut s)?;
            Ok(counts.into_iter().map(|c| T::of(f64::from(c))).collect())
        })
        .collect()
}

/// Per-epoch diagnostics of a training run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainTrajectory<T> {
    /// Test accuracy in percent after each epoch.
    pub accuracy: Vec<T>,
    /// Mean L2 norm of the class rows after each epoch.
    pub mean_row_norm: Vec<T>,
}

/// Index of the maximum; ties resolve to the lowest index.
pub fn argmax<T: PartialOrd + Copy>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Indices of the largest and second-largest entries (lowest index on ties).
pub fn top_two<T: PartialOrd + Copy>(v: &[T]) -> (usize, usize) {
    let first = argmax(v);
    let mut second = if first == 0 { 1 } else { 0 };
    for (i, &x) in v.iter().enumerate() {
        if i != first && x > v[second] {
            second = i;
        }
    }
    (first, second)
}

pub fn accuracy_pct<T: Scalar>(truth: &[usize], predicted: &[usize]) -> T {
    if truth.is_empty() {
        return T::zero();
    }
    let hits = truth.iter().zip(predicted).filter(|(a, b)| a == b).count();
    T::of(100.0) * T::of_usize(hits) / T::of_usize(truth.len())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_ties_low() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(top_two(&[2.0, 5.0, 5.0, 1.0]), (1, 2));
        assert_eq!(top_two(&[9.0, 1.0, 4.0]), (0, 2));
        assert_eq!(top_two(&[1.0, 1.0]), (0, 1));
    }

    #[test]
    fn streams_are_separated_by_purpose() {
        let s = RunStreams::new("digits-hybrid", 2026, 23);
        assert_ne!(s.train_order(0), s.encode_train(0));
        assert_ne!(s.encode_train(0), s.encode_test());
        assert_ne!(s.encode_train(0), s.encode_train(1));
        assert_eq!(s.encode_test(), RunStreams::new("digits-hybrid", 2026, 23).encode_test());
        assert_ne!(s.encode_test(), RunStreams::new("digits-hybrid", 2026, 11).encode_test());
        let resolved = s.path().clone().push("encode-test", 0).push("epoch", 0).push("sample", 5).resolve();
        assert_eq!(resolved, sample_stream(&s.encode_test(), 5));
    }
}
