//! LIF membrane dynamics and three-factor STDP kernels.
//!
//! These kernels are exercised by tests and the `demo-kernels` subcommand;
//! the benchmark learners do not depend on them.
//!
//! Per-bin update order: eligibility (using the traces as of bin `t` and the
//! spikes of bin `t`), then the traces, then an optional reward.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// `exp(−dt/τ)`.
pub fn decay_factor<T: Scalar>(dt: T, tau: T) -> T {
    (-dt / tau).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LifConfig<T> {
    pub tau_m: T,
    pub v_theta: T,
    pub v_reset: T,
    pub i0: T,
    pub refrac_bins: u32,
    pub dt: T,
}

impl<T: Scalar> Default for LifConfig<T> {
    fn default() -> Self {
        Self {
            tau_m: T::of(0.020),
            v_theta: T::one(),
            v_reset: T::zero(),
            i0: T::zero(),
            refrac_bins: 2,
            dt: T::of(0.001),
        }
    }
}

impl<T: Scalar> LifConfig<T> {
    pub fn alpha(&self) -> T {
        decay_factor(self.dt, self.tau_m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tau_m.is_nan() || self.tau_m <= T::zero() || self.dt.is_nan() || self.dt <= T::zero() {
            return Err(Error::InvalidConfig("tau_m and dt must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LifState<T> {
    pub v: T,
    pub refrac_remaining: u32,
}

/// One membrane step: `v ← αv + (1−α)I + I₀`, spike and reset at `v ≥ v_θ`.
pub fn lif_step<T: Scalar>(state: LifState<T>, input_current: T, cfg: &LifConfig<T>) -> (LifState<T>, bool) {
    if state.refrac_remaining > 0 {
        return (LifState { v: cfg.v_reset, refrac_remaining: state.refrac_remaining - 1 }, false);
    }
    let alpha = cfg.alpha();
    let v = alpha * state.v + (T::one() - alpha) * input_current + cfg.i0;
    if v >= cfg.v_theta {
        (LifState { v: cfg.v_reset, refrac_remaining: cfg.refrac_bins }, true)
    } else {
        (LifState { v, refrac_remaining: 0 }, false)
    }
}

/// Time constants and amplitudes of the three-factor rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlasticityParams<T> {
    pub tau_pre: T,
    pub tau_post: T,
    pub tau_elig: T,
    pub a_plus: T,
    pub a_minus: T,
    pub eta: T,
    pub w_min: T,
    pub w_max: T,
    pub dt: T,
}

impl<T: Scalar> Default for PlasticityParams<T> {
    fn default() -> Self {
        Self {
            tau_pre: T::of(0.020),
            tau_post: T::of(0.020),
            tau_elig: T::one(),
            a_plus: T::of(0.01),
            a_minus: T::of(0.012),
            eta: T::of(0.05),
            w_min: T::zero(),
            w_max: T::one(),
            dt: T::of(0.001),
        }
    }
}

/// Pre/post traces and the pre×post eligibility matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PlasticityState<T> {
    pub pre_traces: Vec<T>,
    pub post_traces: Vec<T>,
    /// `pre × post`.
    pub eligibility: Matrix<T>,
    pub beta: T,
    pub gamma: T,
    pub delta: T,
    pub a_plus: T,
    pub a_minus: T,
    pub eta: T,
    pub w_min: T,
    pub w_max: T,
}

impl<T: Scalar> PlasticityState<T> {
    pub fn new(n_pre: usize, n_post: usize, params: &PlasticityParams<T>) -> Result<Self> {
        if !(params.tau_pre > T::zero() && params.tau_post > T::zero() && params.tau_elig > T::zero()) {
            return Err(Error::InvalidConfig("trace time constants must be positive".into()));
        }
        if params.w_min > params.w_max {
            return Err(Error::InvalidConfig("w_min exceeds w_max".into()));
        }
        Ok(Self {
            pre_traces: vec![T::zero(); n_pre],
            post_traces: vec![T::zero(); n_post],
            eligibility: Matrix::zeros(n_pre, n_post),
            beta: decay_factor(params.dt, params.tau_pre),
            gamma: decay_factor(params.dt, params.tau_post),
            delta: decay_factor(params.dt, params.tau_elig),
            a_plus: params.a_plus,
            a_minus: params.a_minus,
            eta: params.eta,
            w_min: params.w_min,
            w_max: params.w_max,
        })
    }

    fn check(&self, pre: &[bool], post: &[bool]) -> Result<()> {
        if pre.len() != self.pre_traces.len() {
            return Err(Error::DimensionMismatch { expected: self.pre_traces.len(), actual: pre.len() });
        }
        if post.len() != self.post_traces.len() {
            return Err(Error::DimensionMismatch { expected: self.post_traces.len(), actual: post.len() });
        }
        Ok(())
    }

    /// `x̂ ← βx̂ + x`, `ŷ ← γŷ + y`.
    pub fn step_traces(&mut self, pre: &[bool], post: &[bool]) -> Result<()> {
        self.check(pre, post)?;
        for (tr, &s) in self.pre_traces.iter_mut().zip(pre) {
            *tr = self.beta * *tr + spike(s);
        }
        for (tr, &s) in self.post_traces.iter_mut().zip(post) {
            *tr = self.gamma * *tr + spike(s);
        }
        Ok(())
    }

    /// `e ← δe + A₊ x̂ yᵀ − A₋ x ŷᵀ` with the traces as of the current bin.
    pub fn step_eligibility(&mut self, pre: &[bool], post: &[bool]) -> Result<()> {
        self.check(pre, post)?;
        let n_post = self.post_traces.len();
        for i in 0..self.pre_traces.len() {
            let ltp = self.a_plus * self.pre_traces[i];
            let x = spike(pre[i]);
            let row = self.eligibility.row_mut(i);
            for j in 0..n_post {
                row[j] = self.delta * row[j] + ltp * spike(post[j]) - self.a_minus * x * self.post_traces[j];
            }
        }
        Ok(())
    }

    /// One bin in the documented order: eligibility, then traces.
    pub fn step(&mut self, pre: &[bool], post: &[bool]) -> Result<()> {
        self.step_eligibility(pre, post)?;
        self.step_traces(pre, post)
    }

    /// `w ← clip(w + η R e, w_min, w_max)`.
    pub fn apply_reward(&self, weights: &mut Matrix<T>, reward: T) -> Result<()> {
        if weights.shape() != self.eligibility.shape() {
            return Err(Error::DimensionMismatch {
                expected: self.eligibility.rows() * self.eligibility.cols(),
                actual: weights.rows() * weights.cols(),
            });
        }
        let scale = self.eta * reward;
        for (w, &e) in weights.as_mut_slice().iter_mut().zip(self.eligibility.as_slice()) {
            *w = (*w + scale * e).max(self.w_min).min(self.w_max);
        }
        Ok(())
    }
}

#[inline]
fn spike<T: Scalar>(s: bool) -> T {
    if s {
        T::one()
    } else {
        T::zero()
    }
}

/// A feedforward LIF layer driven by weighted input spikes, with three-factor
/// plasticity on the input weights and a reward delivered at window end.
#[derive(Debug, Clone)]
pub struct RewardedLifLayer<T> {
    pub weights: Matrix<T>,
    pub neurons: Vec<LifState<T>>,
    pub lif: LifConfig<T>,
    pub plasticity: PlasticityState<T>,
}

impl<T: Scalar> RewardedLifLayer<T> {
    pub fn new(weights: Matrix<T>, lif: LifConfig<T>, params: &PlasticityParams<T>) -> Result<Self> {
        lif.validate()?;
        let plasticity = PlasticityState::new(weights.rows(), weights.cols(), params)?;
        Ok(Self { neurons: vec![LifState::default(); weights.cols()], weights, lif, plasticity })
    }

    /// Advances one bin; returns the post spikes.
    pub fn step(&mut self, pre: &[bool]) -> Result<Vec<bool>> {
        if pre.len() != self.weights.rows() {
            return Err(Error::DimensionMismatch { expected: self.weights.rows(), actual: pre.len() });
        }
        let mut post = Vec::with_capacity(self.neurons.len());
        for (j, st) in self.neurons.iter_mut().enumerate() {
            let current = pre
                .iter()
                .enumerate()
                .filter(|(_, &s)| s)
                .fold(T::zero(), |acc, (i, _)| acc + self.weights.get(i, j));
            let (next, fired) = lif_step(*st, current, &self.lif);
            *st = next;
            post.push(fired);
        }
        self.plasticity.step(pre, &post)?;
        Ok(post)
    }

    pub fn reward(&mut self, r: T) -> Result<()> {
        self.plasticity.apply_reward(&mut self.weights, r)
    }
}
