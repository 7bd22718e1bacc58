//! Winner-take-all prototype learner with reward-shaped competition,
//! clip-and-renormalize bounds and threshold homeostasis.
//!
//! Per sample: score `a = x̂Wᵀ − θ`; pick winner and runner-up; pull the
//! winner toward `x̂`; under signed reward push the runner-up away; clip to
//! `[w_min, w_max]` and L2-renormalize the touched prototypes; raise the
//! winner's threshold and decay all thresholds; record a vote for
//! `(winner, label)`. Prediction looks the winner up in the vote table.

use crate::data::{Dataset, SplitIndices};
use crate::encoding::EncoderConfig;
use crate::error::{Error, Result};
use crate::matrix::{dot, l2_norm, Matrix};
use crate::scalar::Scalar;

use super::readout::{read_snapshot, RewardShaping};
use super::{argmax, encode_rates, top_two, RunStreams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxyParams<T> {
    pub neurons: usize,
    pub eta_plus: T,
    pub eta_minus: T,
    pub w_min: T,
    pub w_max: T,
    pub delta_theta: T,
    pub rho: T,
    pub epsilon: T,
}

impl<T: Scalar> Default for ProxyParams<T> {
    fn default() -> Self {
        Self {
            neurons: 96,
            eta_plus: T::of(0.08),
            eta_minus: T::of(0.01),
            w_min: T::zero(),
            w_max: T::one(),
            delta_theta: T::of(0.05),
            rho: T::of(0.995),
            epsilon: T::of(1e-8),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProxyModel<T> {
    /// neurons × features, unit L2 rows.
    pub prototypes: Matrix<T>,
    pub thresholds: Vec<T>,
    /// neurons × classes.
    pub votes: Vec<Vec<u64>>,
    pub params: ProxyParams<T>,
}

/// L2-normalized copy of `x`; the zero vector is returned unchanged.
pub fn unit<T: Scalar>(x: &[T]) -> Vec<T> {
    let n = l2_norm(x);
    if n == T::zero() {
        return x.to_vec();
    }
    x.iter().map(|&v| v / n).collect()
}

impl<T: Scalar> ProxyModel<T> {
    /// Prototypes drawn uniform on `[0,1]` from `init`, then L2-normalized.
    pub fn init(features: usize, classes: usize, params: ProxyParams<T>, init: &mut crate::detrng::StreamState) -> Self {
        let mut prototypes = Matrix::zeros(params.neurons, features);
        for w in prototypes.as_mut_slice() {
            *w = T::of(init.next_uniform());
        }
        for r in 0..params.neurons {
            renormalize(prototypes.row_mut(r), params.epsilon);
        }
        Self {
            prototypes,
            thresholds: vec![T::zero(); params.neurons],
            votes: vec![vec![0; classes]; params.neurons],
            params,
        }
    }

    pub fn neurons(&self) -> usize {
        self.prototypes.rows()
    }

    pub fn classes(&self) -> usize {
        self.votes.first().map_or(0, Vec::len)
    }

    pub fn param_count(&self) -> usize {
        self.prototypes.rows() * self.prototypes.cols() + self.thresholds.len()
    }

    /// Activations `x̂Wᵀ − θ` with `x̂ = x/‖x‖` (a zero `x` is left as is).
    pub fn score(&self, x: &[T]) -> Result<Vec<T>> {
        self.score_unit(&unit(x))
    }

    fn score_unit(&self, xhat: &[T]) -> Result<Vec<T>> {
        if xhat.len() != self.prototypes.cols() {
            return Err(Error::DimensionMismatch { expected: self.prototypes.cols(), actual: xhat.len() });
        }
        Ok((0..self.neurons()).map(|j| dot(self.prototypes.row(j), xhat) - self.thresholds[j]).collect())
    }

    /// One competitive update for a labeled sample.
    pub fn step(&mut self, x: &[T], label: usize, shaping: RewardShaping) -> Result<()> {
        if label >= self.classes() {
            return Err(Error::LabelOutOfRange { label, classes: self.classes() });
        }
        let xhat = unit(x);
        let a = self.score_unit(&xhat)?;
        let (winner, runner_up) = top_two(&a);
        let p = self.params;

        let w = self.prototypes.row_mut(winner);
        for (wi, &xi) in w.iter_mut().zip(&xhat) {
            *wi += p.eta_plus * (xi - *wi);
        }
        clip(w, p.w_min, p.w_max);
        renormalize(w, p.epsilon);

        if shaping == RewardShaping::Signed && runner_up != winner {
            let r = self.prototypes.row_mut(runner_up);
            for (ri, &xi) in r.iter_mut().zip(&xhat) {
                *ri -= p.eta_minus * xi;
            }
            clip(r, p.w_min, p.w_max);
            renormalize(r, p.epsilon);
        }

        self.thresholds[winner] += p.delta_theta;
        for t in &mut self.thresholds {
            *t *= p.rho;
        }
        self.votes[winner][label] += 1;
        Ok(())
    }

    pub fn winner(&self, x: &[T]) -> Result<usize> {
        Ok(argmax(&self.score(x)?))
    }

    /// `a_winner − a_runner_up` for one sample.
    pub fn margin(&self, x: &[T]) -> Result<T> {
        let a = self.score(x)?;
        let (w, r) = top_two(&a);
        Ok(a[w] - a[r])
    }

    /// Class votes per neuron with the global fallback for neurons that never won.
    fn vote_table(&self) -> Result<Vec<usize>> {
        let mut totals = vec![0u64; self.classes()];
        for row in &self.votes {
            for (t, &v) in totals.iter_mut().zip(row) {
                *t += v;
            }
        }
        if totals.iter().all(|&t| t == 0) {
            return Err(Error::Untrained);
        }
        let fallback = argmax(&totals);
        Ok(self
            .votes
            .iter()
            .map(|row| if row.iter().all(|&v| v == 0) { fallback } else { argmax(row) })
            .collect())
    }

    pub fn predict(&self, x: &[T]) -> Result<usize> {
        let table = self.vote_table()?;
        Ok(table[self.winner(x)?])
    }

    pub fn predict_batch(&self, xs: &[Vec<T>]) -> Result<Vec<usize>> {
        let table = self.vote_table()?;
        xs.iter().map(|x| Ok(table[self.winner(x)?])).collect()
    }

    /// Percent of prototype weights exactly at `w_min` and at `w_max`.
    pub fn saturation_pct(&self) -> (T, T) {
        let all = self.prototypes.as_slice();
        let n = T::of_usize(all.len().max(1));
        let lo = all.iter().filter(|&&w| w == self.params.w_min).count();
        let hi = all.iter().filter(|&&w| w == self.params.w_max).count();
        (T::of(100.0) * T::of_usize(lo) / n, T::of(100.0) * T::of_usize(hi) / n)
    }

    /// Snapshot: `neurons:u32, features:u32`, prototypes, thresholds (f64 LE),
    /// then `classes:u32` and the vote table as u64 LE.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&(self.neurons() as u32).to_le_bytes());
        out.extend_from_slice(&(self.prototypes.cols() as u32).to_le_bytes());
        for v in self.prototypes.as_slice().iter().chain(&self.thresholds) {
            out.extend_from_slice(&v.as_f64().to_le_bytes());
        }
        out.extend_from_slice(&(self.classes() as u32).to_le_bytes());
        for row in &self.votes {
            for v in row {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], params: ProxyParams<T>) -> Result<Self> {
        let bad = || Error::InvalidArgument("truncated or malformed model snapshot".into());
        let head = bytes.get(..8).ok_or_else(bad)?;
        let rows = u32::from_le_bytes(head[..4].try_into().unwrap()) as usize;
        let cols = u32::from_le_bytes(head[4..].try_into().unwrap()) as usize;
        let weights_end = 8 + 8 * (rows * cols + rows);
        let (_, _, values) = read_snapshot::<T>(bytes.get(..weights_end).ok_or_else(bad)?, |r, c| r * c + r)?;
        let rest = &bytes[weights_end..];
        let classes = u32::from_le_bytes(rest.get(..4).ok_or_else(bad)?.try_into().unwrap()) as usize;
        let votes_bytes = &rest[4..];
        if votes_bytes.len() != 8 * rows * classes {
            return Err(bad());
        }
        let flat: Vec<u64> = votes_bytes.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().unwrap())).collect();
        let (w, th) = values.split_at(rows * cols);
        Ok(Self {
            prototypes: Matrix::from_vec(rows, cols, w.to_vec())?,
            thresholds: th.to_vec(),
            votes: flat.chunks(classes.max(1)).map(<[u64]>::to_vec).take(rows).collect(),
            params: ProxyParams { neurons: rows, ..params },
        })
    }
}

fn clip<T: Scalar>(w: &mut [T], lo: T, hi: T) {
    for v in w {
        *v = v.max(lo).min(hi);
    }
}

fn renormalize<T: Scalar>(w: &mut [T], epsilon: T) {
    let n = l2_norm(w);
    for v in w {
        *v /= n + epsilon;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxyConfig<T> {
    pub epochs: usize,
    pub shaping: RewardShaping,
    pub params: ProxyParams<T>,
    pub encoder: EncoderConfig<T>,
}

impl<T: Scalar> Default for ProxyConfig<T> {
    fn default() -> Self {
        Self { epochs: 9, shaping: RewardShaping::Signed, params: ProxyParams::default(), encoder: EncoderConfig::default() }
    }
}

#[derive(Debug, Clone)]
pub struct ProxyRun<T> {
    pub model: ProxyModel<T>,
    pub test_rates: Vec<Vec<T>>,
}

/// Fits the proxy over reshuffled, re-encoded training samples; votes accumulate across epochs.
pub fn proxy_fit<T: Scalar>(
    ds: &Dataset<T>,
    split: &SplitIndices,
    cfg: &ProxyConfig<T>,
    streams: &RunStreams,
) -> Result<ProxyRun<T>> {
    if split.train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    cfg.encoder.validate()?;
    let features = ds.feature_count() * cfg.encoder.k;
    let mut model = ProxyModel::init(features, ds.class_count, cfg.params, &mut streams.init());
    for epoch in 0..cfg.epochs {
        let rates = encode_rates(ds, &split.train, &cfg.encoder, &streams.encode_train(epoch as u64))?;
        for pos in streams.train_order(epoch as u64).shuffle(split.train.len()) {
            model.step(&rates[pos], ds.labels[split.train[pos]], cfg.shaping)?;
        }
    }
    let test_rates = encode_rates(ds, &split.test, &cfg.encoder, &streams.encode_test())?;
    Ok(ProxyRun { model, test_rates })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detrng::StreamState;

    fn model(neurons: usize, features: usize, classes: usize, seed: u64) -> ProxyModel<f64> {
        let params = ProxyParams { neurons, ..ProxyParams::default() };
        ProxyModel::init(features, classes, params, &mut StreamState::new(seed))
    }

    fn random_vec(s: &mut StreamState, n: usize) -> Vec<f64> {
        (0..n).map(|_| s.next_uniform() * 10.0).collect()
    }

    #[test]
    fn init_is_unit_norm_and_counts() {
        let m = model(96, 256, 10, 1);
        for r in 0..96 {
            assert!((m.prototypes.row_norm(r) - 1.0).abs() < 1e-6);
        }
        assert_eq!(m.param_count(), 24672);
    }

    #[test]
    fn score_self_similarity_and_threshold() {
        let mut m = model(5, 8, 2, 2);
        let x = m.prototypes.row(3).to_vec();
        let a = m.score(&x).unwrap();
        assert!((a[3] - 1.0).abs() < 1e-6);
        assert_eq!(argmax(&a), 3);
        m.thresholds[3] += 0.05;
        let b = m.score(&x).unwrap();
        assert!((a[3] - b[3] - 0.05).abs() < 1e-12);
    }

    #[test]
    fn score_matches_dot_oracle() {
        let mut s = StreamState::new(5);
        let mut m = model(4, 6, 3, 3);
        for t in &mut m.thresholds {
            *t = s.next_uniform() * 0.1;
        }
        let x = random_vec(&mut s, 6);
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let a = m.score(&x).unwrap();
        for j in 0..4 {
            let mut acc = 0.0;
            for i in 0..6 {
                acc += m.prototypes.get(j, i) * x[i] / norm;
            }
            assert!((a[j] - (acc - m.thresholds[j])).abs() < 1e-12);
        }
        // zero vector: activations are just −θ
        let z = m.score(&[0.0; 6]).unwrap();
        for j in 0..4 {
            assert_eq!(z[j], -m.thresholds[j]);
        }
    }

    #[test]
    fn full_potentiation_copies_input() {
        let mut m = model(4, 6, 2, 4);
        m.params.eta_plus = 1.0;
        let x = [1.0, 2.0, 0.0, 3.0, 1.0, 0.5];
        let w = m.winner(&x).unwrap();
        m.step(&x, 1, RewardShaping::PositiveOnly).unwrap();
        let xhat = unit(&x);
        for (a, b) in m.prototypes.row(w).iter().zip(&xhat) {
            assert!((a - b).abs() < 1e-7);
        }
        assert_eq!(m.votes[w][1], 1);
    }

    #[test]
    fn positive_only_leaves_runner_up() {
        let mut m = model(4, 6, 2, 6);
        let x = [0.4, 2.0, 0.1, 1.0, 1.0, 0.5];
        let (w, r) = top_two(&m.score(&x).unwrap());
        let before = m.prototypes.row(r).to_vec();
        m.step(&x, 0, RewardShaping::PositiveOnly).unwrap();
        assert_eq!(m.prototypes.row(r), before.as_slice());
        let mut m2 = model(4, 6, 2, 6);
        m2.step(&x, 0, RewardShaping::Signed).unwrap();
        assert_ne!(m2.prototypes.row(r), before.as_slice());
        assert_ne!(w, r);
    }

    #[test]
    fn thresholds_homeostasis() {
        let mut m = model(3, 4, 2, 7);
        let x = [1.0, 0.0, 1.0, 0.0];
        let w = m.winner(&x).unwrap();
        m.step(&x, 0, RewardShaping::Signed).unwrap();
        assert!((m.thresholds[w] - 0.05 * 0.995).abs() < 1e-15);
        assert!(m.thresholds.iter().enumerate().all(|(j, &t)| j == w || t == 0.0));
    }

    #[test]
    fn vote_lookup_rules() {
        let mut m = model(3, 4, 3, 8);
        assert!(matches!(m.predict(&[1.0, 0.0, 0.0, 0.0]), Err(Error::Untrained)));
        let x = m.prototypes.row(1).to_vec();
        m.votes[1] = vec![0, 5, 0];
        assert_eq!(m.predict(&x).unwrap(), 1);
        m.votes[1] = vec![3, 3, 0];
        assert_eq!(m.predict(&x).unwrap(), 0);
        // neuron without votes falls back to the globally most voted class
        m.votes[1] = vec![0, 0, 0];
        m.votes[0] = vec![0, 0, 4];
        assert_eq!(m.predict(&x).unwrap(), 2);
    }

    #[test]
    fn snapshot_roundtrip() {
        let mut m = model(5, 7, 3, 9);
        let mut s = StreamState::new(1);
        for i in 0..20 {
            let x = random_vec(&mut s, 7);
            m.step(&x, i % 3, RewardShaping::Signed).unwrap();
        }
        let back = ProxyModel::from_bytes(&m.to_bytes(), m.params).unwrap();
        assert_eq!(back, m);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn invariants_hold_after_every_step(seed in any::<u64>(), signed in any::<bool>(), steps in 1usize..60) {
                let mut m = model(6, 10, 3, seed);
                let mut s = StreamState::new(seed ^ 0xabc);
                let shaping = if signed { RewardShaping::Signed } else { RewardShaping::PositiveOnly };
                for i in 0..steps {
                    let x = random_vec(&mut s, 10);
                    m.step(&x, i % 3, shaping).unwrap();
                    for r in 0..6 {
                        prop_assert!((m.prototypes.row_norm(r) - 1.0).abs() < 1e-6);
                    }
                    prop_assert!(m.prototypes.as_slice().iter().all(|&w| (0.0..=1.0).contains(&w)));
                    prop_assert!(m.thresholds.iter().all(|&t| t >= 0.0));
                    let total: u64 = m.votes.iter().flatten().sum();
                    prop_assert_eq!(total, (i + 1) as u64);
                }
            }
        }
    }
}
