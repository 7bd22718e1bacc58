//! Linear softmax readout trained by a per-class delta rule.

use crate::data::{Dataset, SplitIndices};
use crate::encoding::EncoderConfig;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

use super::{accuracy_pct, argmax, encode_rates, RunStreams, TrainTrajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RewardShaping {
    /// `Δ = y − p`: reinforce the target, depress competitors.
    Signed,
    /// `Δ = y ⊙ (1 − p)`: reinforce the target only.
    PositiveOnly,
}

impl RewardShaping {
    pub fn label(self) -> &'static str {
        match self {
            RewardShaping::Signed => "signed",
            RewardShaping::PositiveOnly => "pos-only",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "signed" => Ok(Self::Signed),
            "pos-only" | "positive_only" | "positive-only" => Ok(Self::PositiveOnly),
            _ => Err(Error::InvalidConfig(format!("unknown reward shaping {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NormMode {
    On,
    Gentle,
    Off,
}

impl NormMode {
    pub fn label(self) -> &'static str {
        match self {
            NormMode::On => "on",
            NormMode::Gentle => "gentle",
            NormMode::Off => "off",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "on" => Ok(Self::On),
            "gentle" => Ok(Self::Gentle),
            "off" => Ok(Self::Off),
            _ => Err(Error::InvalidConfig(format!("unknown normalization mode {s:?}"))),
        }
    }
}

/// Post-epoch class-row rescaling `W_c ← scale · W_c / (‖W_c‖ + ε)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormSchedule<T> {
    pub mode: NormMode,
    pub scale: T,
    /// Applied after epochs that are multiples of this (1-based).
    pub interval: usize,
    pub epsilon: T,
}

impl<T: Scalar> NormSchedule<T> {
    pub fn on() -> Self {
        Self { mode: NormMode::On, scale: T::of(0.98), interval: 1, epsilon: T::of(1e-8) }
    }

    pub fn gentle() -> Self {
        Self { mode: NormMode::Gentle, scale: T::of(0.995), interval: 5, epsilon: T::of(1e-8) }
    }

    pub fn off() -> Self {
        Self { mode: NormMode::Off, ..Self::on() }
    }

    pub fn from_mode(mode: NormMode) -> Self {
        match mode {
            NormMode::On => Self::on(),
            NormMode::Gentle => Self::gentle(),
            NormMode::Off => Self::off(),
        }
    }

    /// Whether the schedule rescales after `epoch` (1-based).
    pub fn applies_after(&self, epoch: usize) -> bool {
        self.mode != NormMode::Off && epoch >= 1 && epoch.is_multiple_of(self.interval.max(1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutModel<T> {
    /// classes × features.
    pub weights: Matrix<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> ReadoutModel<T> {
    pub fn zeros(classes: usize, features: usize) -> Self {
        Self { weights: Matrix::zeros(classes, features), bias: vec![T::zero(); classes] }
    }

    pub fn classes(&self) -> usize {
        self.weights.rows()
    }

    pub fn features(&self) -> usize {
        self.weights.cols()
    }

    pub fn param_count(&self) -> usize {
        self.classes() * self.features() + self.classes()
    }

    pub fn logits(&self, r: &[T]) -> Result<Vec<T>> {
        let mut z = self.weights.mul_vec(r)?;
        for (zi, &bi) in z.iter_mut().zip(&self.bias) {
            *zi += bi;
        }
        Ok(z)
    }

    /// `softmax(W r + b)`.
    pub fn forward(&self, r: &[T]) -> Result<Vec<T>> {
        Ok(softmax(&self.logits(r)?))
    }

    pub fn predict(&self, r: &[T]) -> Result<usize> {
        Ok(argmax(&self.logits(r)?))
    }

    pub fn predict_batch(&self, rs: &[Vec<T>]) -> Result<Vec<usize>> {
        rs.iter().map(|r| self.predict(r)).collect()
    }

    /// `W += lr · Δ rᵀ`, `b += lr · Δ` with `Δ` from the reward shaping.
    pub fn update(&mut self, r: &[T], y: &[T], shaping: RewardShaping, lr: T) -> Result<()> {
        if y.len() != self.classes() {
            return Err(Error::DimensionMismatch { expected: self.classes(), actual: y.len() });
        }
        let p = self.forward(r)?;
        let delta = shaped_delta(&p, y, shaping)?;
        self.apply_delta(r, &delta, lr);
        Ok(())
    }

    /// [`update`](Self::update) for a class index target.
    pub fn update_target(&mut self, r: &[T], target: usize, shaping: RewardShaping, lr: T) -> Result<()> {
        if target >= self.classes() {
            return Err(Error::LabelOutOfRange { label: target, classes: self.classes() });
        }
        let mut y = vec![T::zero(); self.classes()];
        y[target] = T::one();
        self.update(r, &y, shaping, lr)
    }

    fn apply_delta(&mut self, r: &[T], delta: &[T], lr: T) {
        for (c, &d) in delta.iter().enumerate() {
            if d == T::zero() {
                continue;
            }
            let step = lr * d;
            for (w, &x) in self.weights.row_mut(c).iter_mut().zip(r) {
                *w += step * x;
            }
            self.bias[c] += step;
        }
    }

    /// Rescales class rows if the schedule fires after `epoch_just_finished` (1-based).
    pub fn apply_normalization(&mut self, schedule: &NormSchedule<T>, epoch_just_finished: usize) {
        if !schedule.applies_after(epoch_just_finished) {
            return;
        }
        for c in 0..self.classes() {
            let norm = self.weights.row_norm(c);
            let factor = schedule.scale / (norm + schedule.epsilon);
            for w in self.weights.row_mut(c) {
                *w *= factor;
            }
        }
    }

    pub fn mean_row_norm(&self) -> T {
        let n = self.classes().max(1);
        (0..self.classes()).map(|c| self.weights.row_norm(c)).sum::<T>() / T::of_usize(n)
    }

    /// Flat little-endian snapshot: `rows:u32, cols:u32`, row-major weights, then biases (f64).
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 8 * (self.param_count()));
        out.extend_from_slice(&(self.classes() as u32).to_le_bytes());
        out.extend_from_slice(&(self.features() as u32).to_le_bytes());
        for v in self.weights.as_slice().iter().chain(&self.bias) {
            out.extend_from_slice(&v.as_f64().to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (rows, cols, values) = read_snapshot(bytes, |r, c| r * c + r)?;
        let (w, b) = values.split_at(rows * cols);
        Ok(Self { weights: Matrix::from_vec(rows, cols, w.to_vec())?, bias: b.to_vec() })
    }
}

/// Parses the `rows, cols, f64 payload` snapshot layout.
pub(crate) fn read_snapshot<T: Scalar>(
    bytes: &[u8],
    expected_values: impl Fn(usize, usize) -> usize,
) -> Result<(usize, usize, Vec<T>)> {
    let bad = || Error::InvalidArgument("truncated or malformed model snapshot".into());
    let header = bytes.get(..8).ok_or_else(bad)?;
    let rows = u32::from_le_bytes(header[..4].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(header[4..].try_into().unwrap()) as usize;
    let n = expected_values(rows, cols);
    let payload = &bytes[8..];
    if payload.len() != 8 * n {
        return Err(bad());
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| T::of(f64::from_le_bytes(c.try_into().unwrap())))
        .collect();
    Ok((rows, cols, values))
}

/// Numerically stable softmax (max-subtracted).
pub fn softmax<T: Scalar>(z: &[T]) -> Vec<T> {
    let m = z.iter().copied().fold(T::neg_infinity(), T::max);
    let e: Vec<T> = z.iter().map(|&v| (v - m).exp()).collect();
    let s: T = e.iter().copied().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Reward-shaped update direction.
pub fn shaped_delta<T: Scalar>(p: &[T], y: &[T], shaping: RewardShaping) -> Result<Vec<T>> {
    if p.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: p.len(), actual: y.len() });
    }
    let ones = y.iter().filter(|&&v| v == T::one()).count();
    if ones != 1 || y.iter().any(|&v| v != T::one() && v != T::zero()) {
        return Err(Error::NotOneHot);
    }
    Ok(match shaping {
        RewardShaping::Signed => y.iter().zip(p).map(|(&yi, &pi)| yi - pi).collect(),
        RewardShaping::PositiveOnly => y.iter().zip(p).map(|(&yi, &pi)| yi * (T::one() - pi)).collect(),
    })
}

/// Settings of the re-encoding hybrid trainer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridConfig<T> {
    pub epochs: usize,
    pub lr: T,
    pub shaping: RewardShaping,
    pub schedule: NormSchedule<T>,
    pub encoder: EncoderConfig<T>,
}

impl<T: Scalar> Default for HybridConfig<T> {
    fn default() -> Self {
        Self {
            epochs: 18,
            lr: T::of(0.003),
            shaping: RewardShaping::Signed,
            schedule: NormSchedule::on(),
            encoder: EncoderConfig::default(),
        }
    }
}

/// Trained readout plus what evaluation needs.
#[derive(Debug, Clone)]
pub struct HybridRun<T> {
    pub model: ReadoutModel<T>,
    pub trajectory: TrainTrajectory<T>,
    /// Fixed test encodings (spike counts).
    pub test_rates: Vec<Vec<T>>,
}

/// Trains the readout on spike counts re-encoded every epoch.
///
/// Sample order is reshuffled each epoch; the trajectory records test
/// accuracy and mean class-row norm after each epoch's normalization.
pub fn train_hybrid<T: Scalar>(
    ds: &Dataset<T>,
    split: &SplitIndices,
    cfg: &HybridConfig<T>,
    streams: &RunStreams,
) -> Result<HybridRun<T>> {
    if split.train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    cfg.encoder.validate()?;
    let mut model = ReadoutModel::zeros(ds.class_count, ds.feature_count() * cfg.encoder.k);
    let test_rates = encode_rates(ds, &split.test, &cfg.encoder, &streams.encode_test())?;
    let test_labels: Vec<usize> = split.test.iter().map(|&i| ds.labels[i]).collect();
    let mut trajectory = TrainTrajectory::default();

    for epoch in 0..cfg.epochs {
        let rates = encode_rates(ds, &split.train, &cfg.encoder, &streams.encode_train(epoch as u64))?;
        let order = streams.train_order(epoch as u64).shuffle(split.train.len());
        for pos in order {
            model.update_target(&rates[pos], ds.labels[split.train[pos]], cfg.shaping, cfg.lr)?;
        }
        model.apply_normalization(&cfg.schedule, epoch + 1);
        let predicted = model.predict_batch(&test_rates)?;
        trajectory.accuracy.push(accuracy_pct(&test_labels, &predicted));
        trajectory.mean_row_norm.push(model.mean_row_norm());
    }
    Ok(HybridRun { model, trajectory, test_rates })
}

/// Settings of the static-feature delta-rule trainer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StaticConfig<T> {
    pub epochs: usize,
    pub lr: T,
    pub shaping: RewardShaping,
    pub schedule: NormSchedule<T>,
}

impl<T: Scalar> Default for StaticConfig<T> {
    fn default() -> Self {
        Self { epochs: 60, lr: T::of(0.01), shaping: RewardShaping::Signed, schedule: NormSchedule::off() }
    }
}

/// Delta-rule softmax on fixed feature vectors; `order` drives the per-epoch shuffles.
pub fn train_softmax_baseline<T: Scalar>(
    features: &[Vec<T>],
    labels: &[usize],
    classes: usize,
    cfg: &StaticConfig<T>,
    streams: &RunStreams,
) -> Result<ReadoutModel<T>> {
    let Some(first) = features.first() else {
        return Err(Error::EmptyDataset);
    };
    if features.len() != labels.len() {
        return Err(Error::DimensionMismatch { expected: features.len(), actual: labels.len() });
    }
    let mut model = ReadoutModel::zeros(classes, first.len());
    for epoch in 0..cfg.epochs {
        for pos in streams.train_order(epoch as u64).shuffle(features.len()) {
            model.update_target(&features[pos], labels[pos], cfg.shaping, cfg.lr)?;
        }
        model.apply_normalization(&cfg.schedule, epoch + 1);
    }
    Ok(model)
}
