//! Gaussian-tuned Poisson population encoder.
//!
//! Each feature `x ∈ [0,1]` drives `K` channels with rates
//! `λ_k = λ_max · exp(−(x − μ_k)² / 2σ²)`; every (channel, bin) cell is an
//! independent Bernoulli draw with probability `λ_k · dt`.

use crate::detrng::StreamState;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncoderConfig<T> {
    /// Neurons per feature.
    pub k: usize,
    /// Tuning width in feature units.
    pub sigma: T,
    /// Peak rate in Hz.
    pub lambda_max: T,
    /// Bin width in seconds.
    pub dt: T,
    /// Window length in bins.
    pub bins: usize,
}

impl<T: Scalar> Default for EncoderConfig<T> {
    fn default() -> Self {
        Self { k: 4, sigma: T::of(0.25), lambda_max: T::of(200.0), dt: T::of(0.001), bins: 120 }
    }
}

impl<T: Scalar> EncoderConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("K must be at least 1".into()));
        }
        if self.sigma.is_nan() || self.sigma <= T::zero() {
            return Err(Error::InvalidConfig(format!("sigma must be positive, got {}", self.sigma)));
        }
        if self.lambda_max < T::zero() || self.dt.is_nan() || self.dt <= T::zero() {
            return Err(Error::InvalidConfig("lambda_max must be >= 0 and dt > 0".into()));
        }
        if self.lambda_max * self.dt > T::one() {
            return Err(Error::InvalidConfig(format!(
                "lambda_max*dt = {} exceeds 1; per-bin probability invalid",
                self.lambda_max * self.dt
            )));
        }
        if self.bins == 0 {
            return Err(Error::InvalidConfig("window must have at least one bin".into()));
        }
        Ok(())
    }

    /// Tuning centers, evenly spaced on `[0, 1]` including both endpoints.
    pub fn centers(&self) -> Vec<T> {
        if self.k == 1 {
            return vec![T::of(0.5)];
        }
        let last = T::of_usize(self.k - 1);
        (0..self.k).map(|k| T::of_usize(k) / last).collect()
    }

    pub fn channels(&self, features: usize) -> usize {
        features * self.k
    }
}

/// Rates (Hz) of the `K` channels tuned to feature value `x`.
pub fn tuning_rates<T: Scalar>(x: T, cfg: &EncoderConfig<T>) -> Result<Vec<T>> {
    check_feature(x)?;
    let two_var = T::of(2.0) * cfg.sigma * cfg.sigma;
    Ok(cfg
        .centers()
        .into_iter()
        .map(|mu| cfg.lambda_max * (-(x - mu) * (x - mu) / two_var).exp())
        .collect())
}

fn check_feature<T: Scalar>(x: T) -> Result<()> {
    if !(x >= T::zero() && x <= T::one()) {
        return Err(Error::FeatureOutOfRange(x.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(())
}

/// Per-channel spike probabilities `λ·dt`, feature-major then center.
pub fn channel_probabilities<T: Scalar>(features: &[T], cfg: &EncoderConfig<T>) -> Result<Vec<f64>> {
    cfg.validate()?;
    let mut out = Vec::with_capacity(features.len() * cfg.k);
    for &x in features {
        for rate in tuning_rates(x, cfg)? {
            let p = (rate * cfg.dt).as_f64();
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidProbability(p));
            }
            out.push(p);
        }
    }
    Ok(out)
}

/// Binary spike matrix, channels × bins, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpikeRaster {
    channels: usize,
    bins: usize,
    spikes: Vec<u8>,
}

impl SpikeRaster {
    pub fn zeros(channels: usize, bins: usize) -> Self {
        Self { channels, bins, spikes: vec![0; channels * bins] }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    #[inline]
    pub fn get(&self, channel: usize, bin: usize) -> bool {
        self.spikes[channel * self.bins + bin] != 0
    }

    #[inline]
    pub fn set(&mut self, channel: usize, bin: usize, spike: bool) {
        self.spikes[channel * self.bins + bin] = u8::from(spike);
    }

    pub fn channel(&self, channel: usize) -> &[u8] {
        &self.spikes[channel * self.bins..(channel + 1) * self.bins]
    }

    pub fn total_spikes(&self) -> u64 {
        self.spikes.iter().map(|&s| u64::from(s)).sum()
    }
}

/// Draws a spike raster for one sample. Draw order: channel-major, then bin.
pub fn encode_sample<T: Scalar>(
    features: &[T],
    cfg: &EncoderConfig<T>,
    stream: &mut StreamState,
) -> Result<SpikeRaster> {
    let probs = channel_probabilities(features, cfg)?;
    let mut raster = SpikeRaster::zeros(probs.len(), cfg.bins);
    for (c, &p) in probs.iter().enumerate() {
        for t in 0..cfg.bins {
            if stream.next_uniform() < p {
                raster.set(c, t, true);
            }
        }
    }
    Ok(raster)
}

/// Per-channel spike counts, consuming `stream` exactly as [`encode_sample`]
/// does, so `encode_counts(..) == rate_features(&encode_sample(..))`.
pub fn encode_counts<T: Scalar>(
    features: &[T],
    cfg: &EncoderConfig<T>,
    stream: &mut StreamState,
) -> Result<Vec<u32>> {
    let probs = channel_probabilities(features, cfg)?;
    // u·2⁻⁵³ < p  ⇔  u < ⌈p·2⁵³⌉ for integer u, so this matches next_uniform() < p bit for bit.
    let scale = (1u64 << 53) as f64;
    Ok(probs
        .iter()
        .map(|&p| {
            let threshold = (p * scale).ceil() as u64;
            (0..cfg.bins).filter(|_| (stream.next_u64() >> 11) < threshold).count() as u32
        })
        .collect())
}

/// Per-channel spike counts over the whole window.
pub fn rate_features(raster: &SpikeRaster) -> Vec<u32> {
    (0..raster.channels)
        .map(|c| raster.channel(c).iter().map(|&s| u32::from(s)).sum())
        .collect()
}

/// Counts in `bin_count` equal contiguous windows, channel-major then window.
pub fn binned_features(raster: &SpikeRaster, bin_count: usize) -> Result<Vec<u32>> {
    if bin_count == 0 || !raster.bins.is_multiple_of(bin_count) {
        return Err(Error::InvalidArgument(format!(
            "bin count {bin_count} does not divide window of {} bins",
            raster.bins
        )));
    }
    let width = raster.bins / bin_count;
    let mut out = Vec::with_capacity(raster.channels * bin_count);
    for c in 0..raster.channels {
        out.extend(
            raster
                .channel(c)
                .chunks_exact(width)
                .map(|w| w.iter().map(|&s| u32::from(s)).sum::<u32>()),
        );
    }
    Ok(out)
}

/// Analytic mean spike count of one encoded sample: `Σ λ·dt·T`.
pub fn expected_spike_count<T: Scalar>(features: &[T], cfg: &EncoderConfig<T>) -> Result<T> {
    let mut total = T::zero();
    for &x in features {
        for rate in tuning_rates(x, cfg)? {
            total += rate * cfg.dt * T::of_usize(cfg.bins);
        }
    }
    Ok(total)
}

/// Variance of the total spike count (sum of independent Bernoulli cells).
pub fn spike_count_variance<T: Scalar>(features: &[T], cfg: &EncoderConfig<T>) -> Result<T> {
    let mut total = T::zero();
    for &x in features {
        for rate in tuning_rates(x, cfg)? {
            let p = rate * cfg.dt;
            total += p * (T::one() - p) * T::of_usize(cfg.bins);
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detrng::SeedPath;

    fn cfg() -> EncoderConfig<f64> {
        EncoderConfig::default()
    }

    #[test]
    fn centers_include_endpoints() {
        assert_eq!(cfg().centers(), vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]);
        let one = EncoderConfig { k: 1, ..cfg() };
        assert_eq!(one.centers(), vec![0.5]);
    }

    #[test]
    fn rates_at_center_and_one_sigma() {
        let c = cfg();
        let mu = c.centers()[1];
        let r = tuning_rates(mu, &c).unwrap();
        assert!((r[1] - 200.0).abs() < 1e-12);
        let r = tuning_rates(mu + 0.25, &c).unwrap();
        let expected = 200.0 * (-0.5f64).exp();
        assert!((r[1] - expected).abs() < 1e-9);
        assert!((r[1] - 121.31).abs() < 0.005);
    }

    #[test]
    fn flat_tuning_limit() {
        let c = EncoderConfig { sigma: 1e6, ..cfg() };
        for x in [0.0, 0.3, 1.0] {
            for r in tuning_rates(x, &c).unwrap() {
                assert!((r / 200.0 - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn rejects_unnormalized_features() {
        assert!(matches!(tuning_rates(1.5, &cfg()), Err(Error::FeatureOutOfRange(_))));
        assert!(tuning_rates(-0.01, &cfg()).is_err());
        let mut s = StreamState::new(1);
        assert!(encode_sample(&[0.2, 16.0], &cfg(), &mut s).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(EncoderConfig { k: 0, ..cfg() }.validate().is_err());
        assert!(EncoderConfig { sigma: 0.0, ..cfg() }.validate().is_err());
        assert!(EncoderConfig { lambda_max: 2000.0, ..cfg() }.validate().is_err());
        assert!(cfg().validate().is_ok());
    }

    #[test]
    fn zero_features_still_fire() {
        let mut s = StreamState::new(5);
        let raster = encode_sample(&[0.0; 64], &cfg(), &mut s).unwrap();
        assert_eq!(raster.channels(), 256);
        assert_eq!(raster.bins(), 120);
        assert!(raster.total_spikes() > 0);
    }

    #[test]
    fn encoding_is_deterministic_and_counts_match() {
        let features: Vec<f64> = (0..64).map(|i| (i % 17) as f64 / 16.0).collect();
        let s = SeedPath::root("enc", 1).resolve();
        let a = encode_sample(&features, &cfg(), &mut s.clone()).unwrap();
        let b = encode_sample(&features, &cfg(), &mut s.clone()).unwrap();
        assert_eq!(a, b);
        let counts = encode_counts(&features, &cfg(), &mut s.clone()).unwrap();
        assert_eq!(counts, rate_features(&a));
    }

    #[test]
    fn rate_features_cases() {
        let r = SpikeRaster::zeros(4, 10);
        assert_eq!(rate_features(&r), vec![0; 4]);
        let mut r = SpikeRaster::zeros(4, 10);
        r.set(2, 7, true);
        assert_eq!(rate_features(&r), vec![0, 0, 1, 0]);
    }

    fn random_raster(seed: u64, channels: usize, bins: usize) -> SpikeRaster {
        let mut s = StreamState::new(seed);
        let mut r = SpikeRaster::zeros(channels, bins);
        for c in 0..channels {
            for t in 0..bins {
                r.set(c, t, s.next_uniform() < 0.3);
            }
        }
        r
    }

    #[test]
    fn rate_and_binned_match_brute_force() {
        let r = random_raster(11, 12, 120);
        let brute_rows: Vec<u32> = (0..12)
            .map(|c| {
                let mut n = 0;
                for t in 0..120 {
                    if r.get(c, t) {
                        n += 1;
                    }
                }
                n
            })
            .collect();
        assert_eq!(rate_features(&r), brute_rows);
        assert_eq!(binned_features(&r, 1).unwrap(), brute_rows);

        let binned = binned_features(&r, 10).unwrap();
        for c in 0..12 {
            for b in 0..10 {
                let mut n = 0;
                for t in b * 12..(b + 1) * 12 {
                    if r.get(c, t) {
                        n += 1;
                    }
                }
                assert_eq!(binned[c * 10 + b], n);
            }
        }

        let full = binned_features(&r, 120).unwrap();
        for c in 0..12 {
            for t in 0..120 {
                assert_eq!(full[c * 120 + t], u32::from(r.get(c, t)));
            }
        }
        assert!(binned_features(&r, 7).is_err());
        assert!(binned_features(&r, 0).is_err());
    }

    #[test]
    fn expected_count_cases() {
        let silent = EncoderConfig { lambda_max: 0.0, ..cfg() };
        assert_eq!(expected_spike_count(&[0.3, 0.9], &silent).unwrap(), 0.0);
        let single = EncoderConfig { k: 1, ..cfg() };
        assert!((expected_spike_count(&[0.5], &single).unwrap() - 24.0).abs() < 1e-12);
    }

    #[test]
    fn empirical_counts_match_analytic_mean() {
        // 10^4 re-encodings of one sample; Poisson-binomial mean ± 3σ/√N.
        let features: Vec<f64> = (0..64).map(|i| ((i * 7) % 17) as f64 / 16.0).collect();
        let c = cfg();
        let mean = expected_spike_count(&features, &c).unwrap();
        let var = spike_count_variance(&features, &c).unwrap();
        let n = 10_000;
        let root = SeedPath::root("reencode", 0).resolve();
        let total: u64 = (0..n)
            .map(|i| {
                let mut s = root.child(i);
                encode_counts(&features, &c, &mut s).unwrap().iter().map(|&x| u64::from(x)).sum::<u64>()
            })
            .sum();
        let emp = total as f64 / n as f64;
        assert!((emp - mean).abs() <= 3.0 * (var / n as f64).sqrt(), "emp {emp} vs {mean}");
    }

    #[test]
    fn per_bin_probability_bounded() {
        let features: Vec<f64> = (0..=16).map(|i| i as f64 / 16.0).collect();
        for p in channel_probabilities(&features, &cfg()).unwrap() {
            assert!((0.0..=0.2 + 1e-15).contains(&p));
        }
    }

    #[test]
    fn generic_over_f32() {
        let c: EncoderConfig<f32> = EncoderConfig::default();
        let r = tuning_rates(0.0f32, &c).unwrap();
        assert!((r[0] - 200.0).abs() < 1e-4);
    }
}
