//! Independent reference implementations used as test oracles.
#![allow(dead_code, clippy::needless_range_loop)]

use spikebench::detrng::StreamState;

/// Plain-array LIF, traces, eligibility and reward update.
pub struct NaiveKernels {
    pub v: Vec<f64>,
    pub refrac: Vec<u32>,
    pub xhat: Vec<f64>,
    pub yhat: Vec<f64>,
    pub e: Vec<Vec<f64>>,
    pub w: Vec<Vec<f64>>,
}

pub struct NaiveParams {
    pub dt: f64,
    pub tau_m: f64,
    pub v_theta: f64,
    pub v_reset: f64,
    pub i0: f64,
    pub refrac_bins: u32,
    pub tau_pre: f64,
    pub tau_post: f64,
    pub tau_elig: f64,
    pub a_plus: f64,
    pub a_minus: f64,
    pub eta: f64,
    pub w_min: f64,
    pub w_max: f64,
}

impl NaiveKernels {
    pub fn new(n_pre: usize, n_post: usize, w: Vec<Vec<f64>>) -> Self {
        Self {
            v: vec![0.0; n_post],
            refrac: vec![0; n_post],
            xhat: vec![0.0; n_pre],
            yhat: vec![0.0; n_post],
            e: vec![vec![0.0; n_post]; n_pre],
            w,
        }
    }

    pub fn lif(&mut self, j: usize, current: f64, p: &NaiveParams) -> bool {
        if self.refrac[j] > 0 {
            self.refrac[j] -= 1;
            self.v[j] = p.v_reset;
            return false;
        }
        let a = (-p.dt / p.tau_m).exp();
        let v = a * self.v[j] + (1.0 - a) * current + p.i0;
        if v >= p.v_theta {
            self.v[j] = p.v_reset;
            self.refrac[j] = p.refrac_bins;
            true
        } else {
            self.v[j] = v;
            false
        }
    }

    pub fn plasticity(&mut self, pre: &[bool], post: &[bool], p: &NaiveParams) {
        let d = (-p.dt / p.tau_elig).exp();
        for i in 0..pre.len() {
            for j in 0..post.len() {
                let x = if pre[i] { 1.0 } else { 0.0 };
                let y = if post[j] { 1.0 } else { 0.0 };
                self.e[i][j] = d * self.e[i][j] + p.a_plus * self.xhat[i] * y - p.a_minus * x * self.yhat[j];
            }
        }
        let b = (-p.dt / p.tau_pre).exp();
        let g = (-p.dt / p.tau_post).exp();
        for i in 0..pre.len() {
            self.xhat[i] = b * self.xhat[i] + if pre[i] { 1.0 } else { 0.0 };
        }
        for j in 0..post.len() {
            self.yhat[j] = g * self.yhat[j] + if post[j] { 1.0 } else { 0.0 };
        }
    }

    pub fn reward(&mut self, r: f64, p: &NaiveParams) {
        for i in 0..self.w.len() {
            for j in 0..self.w[i].len() {
                let raw = self.w[i][j] + p.eta * r * self.e[i][j];
                self.w[i][j] = if raw < p.w_min {
                    p.w_min
                } else if raw > p.w_max {
                    p.w_max
                } else {
                    raw
                };
            }
        }
    }
}

/// Outcome of a lockstep library-vs-reference simulation.
#[derive(Debug, Default)]
pub struct KernelComparison {
    pub max_diff: f64,
    pub spike_mismatches: usize,
    pub weights_in_bounds: bool,
    pub post_spikes: usize,
}

/// Runs the library layer and the naive reference side by side for `steps` bins.
pub fn compare_kernels(seed: u64, steps: usize) -> KernelComparison {
    use spikebench::matrix::Matrix;
    use spikebench::plasticity::{LifConfig, PlasticityParams, RewardedLifLayer};

    let mut s = StreamState::new(seed);
    let (n_pre, n_post) = (8 + s.below(5), 3 + s.below(4));
    let p = NaiveParams {
        dt: 0.001,
        tau_m: 0.005 + 0.03 * s.next_uniform(),
        v_theta: 1.0,
        v_reset: 0.0,
        i0: 0.01 * s.next_uniform(),
        refrac_bins: s.below(4) as u32,
        tau_pre: 0.005 + 0.05 * s.next_uniform(),
        tau_post: 0.005 + 0.05 * s.next_uniform(),
        tau_elig: 0.05 + s.next_uniform(),
        a_plus: 0.05 + 0.2 * s.next_uniform(),
        a_minus: 0.05 + 0.2 * s.next_uniform(),
        eta: 0.5 + s.next_uniform(),
        w_min: 0.0,
        w_max: 1.0,
    };
    let w0: Vec<Vec<f64>> = (0..n_pre).map(|_| (0..n_post).map(|_| s.next_uniform()).collect()).collect();
    let lif = LifConfig {
        tau_m: p.tau_m,
        v_theta: p.v_theta,
        v_reset: p.v_reset,
        i0: p.i0,
        refrac_bins: p.refrac_bins,
        dt: p.dt,
    };
    let params = PlasticityParams {
        tau_pre: p.tau_pre,
        tau_post: p.tau_post,
        tau_elig: p.tau_elig,
        a_plus: p.a_plus,
        a_minus: p.a_minus,
        eta: p.eta,
        w_min: p.w_min,
        w_max: p.w_max,
        dt: p.dt,
    };
    let flat: Vec<f64> = w0.iter().flatten().copied().collect();
    let mut layer = RewardedLifLayer::new(Matrix::from_vec(n_pre, n_post, flat).unwrap(), lif, &params).unwrap();
    let mut naive = NaiveKernels::new(n_pre, n_post, w0);
    let mut out = KernelComparison { weights_in_bounds: true, ..Default::default() };
    let rate = 0.1 + 0.4 * s.next_uniform();

    for t in 0..steps {
        let pre: Vec<bool> = (0..n_pre).map(|_| s.next_uniform() < rate).collect();
        let post = layer.step(&pre).unwrap();
        let mut naive_post = Vec::with_capacity(n_post);
        for j in 0..n_post {
            let current: f64 = (0..n_pre).filter(|&i| pre[i]).map(|i| naive.w[i][j]).sum();
            naive_post.push(naive.lif(j, current, &p));
        }
        naive.plasticity(&pre, &naive_post, &p);
        out.spike_mismatches += post.iter().zip(&naive_post).filter(|(a, b)| a != b).count();
        out.post_spikes += post.iter().filter(|&&b| b).count();
        if t % 20 == 19 {
            let r = 10.0 * (s.next_uniform() - 0.5);
            layer.reward(r).unwrap();
            naive.reward(r, &p);
        }
        let mut diff: f64 = 0.0;
        for j in 0..n_post {
            diff = diff.max((layer.neurons[j].v - naive.v[j]).abs());
            diff = diff.max((layer.plasticity.post_traces[j] - naive.yhat[j]).abs());
        }
        for i in 0..n_pre {
            diff = diff.max((layer.plasticity.pre_traces[i] - naive.xhat[i]).abs());
            for j in 0..n_post {
                diff = diff.max((layer.plasticity.eligibility.get(i, j) - naive.e[i][j]).abs());
                diff = diff.max((layer.weights.get(i, j) - naive.w[i][j]).abs());
            }
        }
        out.max_diff = out.max_diff.max(diff);
        out.weights_in_bounds &= layer.weights.as_slice().iter().all(|&w| (p.w_min..=p.w_max).contains(&w));
    }
    out
}

/// `(#{a_i > b_j} − #{a_i < b_j}) / (|a||b|)` by double loop.
pub fn cliffs_brute(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0i64;
    for &x in a {
        for &y in b {
            if x > y {
                s += 1;
            } else if x < y {
                s -= 1;
            }
        }
    }
    s as f64 / (a.len() * b.len()) as f64
}

/// Mean over sample std, computed with a two-pass sum.
pub fn dz_direct(d: &[f64]) -> f64 {
    let n = d.len() as f64;
    let mut sum = 0.0;
    for &x in d {
        sum += x;
    }
    let m = sum / n;
    let mut ss = 0.0;
    for &x in d {
        ss += (x - m) * (x - m);
    }
    m / (ss / (n - 1.0)).sqrt()
}

/// Two-sided exact sign-test p by enumerating binomial probabilities.
pub fn sign_p_enumerated(positives: usize, m: usize) -> f64 {
    let pmf = |k: usize| -> f64 {
        let mut c = 1.0f64;
        for i in 0..k {
            c = c * (m - i) as f64 / (i + 1) as f64;
        }
        c * 0.5f64.powi(m as i32)
    };
    let k = positives.min(m - positives);
    let tail: f64 = (0..=k).map(pmf).sum();
    (2.0 * tail).min(1.0)
}

/// Expected spikes of one sample under the population code, from the rate formula.
pub fn expected_spikes_oracle(x: &[f64], k: usize, sigma: f64, lambda_max: f64, dt: f64, bins: usize) -> f64 {
    let mut total = 0.0;
    for &v in x {
        for c in 0..k {
            let mu = if k == 1 { 0.5 } else { c as f64 / (k - 1) as f64 };
            let rate = lambda_max * (-(v - mu) * (v - mu) / (2.0 * sigma * sigma)).exp();
            total += bins as f64 * (rate * dt).min(1.0);
        }
    }
    total
}
