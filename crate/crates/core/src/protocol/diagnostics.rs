//! Diagnostics bundle and amortized timing.

use std::time::Instant;

use super::{Engine, RunRecord, PRIMARY_SPLIT, REPRESENTATIVE_SEED};
use crate::error::{Error, Result};
use crate::learners::proxy::proxy_fit;
use crate::learners::readout::train_hybrid;
use crate::learners::{encode_rates, RunStreams};
use crate::stats::{confusion_matrix, mean, sample_std};
use crate::{Matrix, Real};

/// Mean, sample std and count of one diagnostic across seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSummary {
    pub name: String,
    pub mean: Real,
    pub std: Real,
    pub n: usize,
}

impl MetricSummary {
    fn of(name: &str, values: &[Real]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let std = if values.len() > 1 { sample_std(values) } else { 0.0 };
        Some(Self { name: name.to_string(), mean: mean(values), std, n: values.len() })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsBundle {
    pub confusion_split: u64,
    pub confusion_seed: u64,
    /// Row-normalized test confusion of the representative hybrid run.
    pub confusion: Matrix,
    pub per_class_f1_mean: Vec<Real>,
    pub per_class_f1_std: Vec<Real>,
    pub metrics: Vec<MetricSummary>,
}

impl DiagnosticsBundle {
    pub fn metric(&self, name: &str) -> Option<&MetricSummary> {
        self.metrics.iter().find(|m| m.name == name)
    }

    /// Computes diagnostics from hybrid and proxy records.
    ///
    /// The confusion matrix comes from the representative seed on the primary
    /// split when present, otherwise from the first hybrid record in canonical order.
    pub fn from_records(records: &[RunRecord], hybrid: &str, proxy: &str, classes: usize) -> Result<Self> {
        let mut h: Vec<&RunRecord> = records.iter().filter(|r| r.experiment == hybrid).collect();
        let mut p: Vec<&RunRecord> = records.iter().filter(|r| r.experiment == proxy).collect();
        if h.is_empty() {
            return Err(Error::MissingExperiment(hybrid.to_string()));
        }
        if p.is_empty() {
            return Err(Error::MissingExperiment(proxy.to_string()));
        }
        h.sort_by_key(|r| (r.split_seed, r.model_seed));
        p.sort_by_key(|r| (r.split_seed, r.model_seed));
        let rep = h
            .iter()
            .find(|r| r.split_seed == PRIMARY_SPLIT && r.model_seed == REPRESENTATIVE_SEED)
            .unwrap_or(&h[0]);
        let confusion = confusion_matrix(&rep.test_labels, &rep.predictions, classes)?;

        let mut per_class_f1_mean = Vec::with_capacity(classes);
        let mut per_class_f1_std = Vec::with_capacity(classes);
        for c in 0..classes {
            let vals: Vec<Real> = h.iter().map(|r| r.per_class_f1[c]).collect();
            let s = MetricSummary::of("", &vals).expect("nonempty");
            per_class_f1_mean.push(s.mean);
            per_class_f1_std.push(s.std);
        }

        let col = |rs: &[&RunRecord], f: &dyn Fn(&RunRecord) -> Option<Real>| -> Vec<Real> {
            rs.iter().filter_map(|r| f(r)).collect()
        };
        let specs: Vec<(&str, Vec<Real>)> = vec![
            ("hybrid_accuracy_pct", col(&h, &|r| Some(r.accuracy))),
            ("hybrid_macro_f1", col(&h, &|r| Some(r.macro_f1))),
            ("hybrid_spikes_per_sample", col(&h, &|r| r.spikes_per_sample)),
            ("hybrid_expected_spikes_per_sample", col(&h, &|r| r.expected_spikes_per_sample)),
            ("hybrid_param_count", col(&h, &|r| Some(r.diagnostics.param_count as Real))),
            ("proxy_accuracy_pct", col(&p, &|r| Some(r.accuracy))),
            ("proxy_macro_f1", col(&p, &|r| Some(r.macro_f1))),
            ("proxy_sat_low_pct", col(&p, &|r| r.diagnostics.sat_low_pct)),
            ("proxy_sat_high_pct", col(&p, &|r| r.diagnostics.sat_high_pct)),
            ("proxy_winner_margin", col(&p, &|r| r.diagnostics.winner_margin)),
            ("proxy_param_count", col(&p, &|r| Some(r.diagnostics.param_count as Real))),
        ];
        let metrics = specs.iter().filter_map(|(n, v)| MetricSummary::of(n, v)).collect();
        Ok(Self {
            confusion_split: rep.split_seed,
            confusion_seed: rep.model_seed,
            confusion,
            per_class_f1_mean,
            per_class_f1_std,
            metrics,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingEntry {
    pub model: String,
    /// `forward` (features to prediction) or `end-to-end` (encode plus forward).
    pub stage: String,
    pub median_us_per_sample: Real,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingReport {
    pub hardware: String,
    pub repeats: usize,
    pub batch: usize,
    pub entries: Vec<TimingEntry>,
}

/// CPU model and logical core count from `/proc/cpuinfo`, or the target triple parts.
pub fn hardware_string() -> String {
    let fallback = format!("{}-{}", std::env::consts::ARCH, std::env::consts::OS);
    let Ok(info) = std::fs::read_to_string("/proc/cpuinfo") else { return fallback };
    let model = info
        .lines()
        .find(|l| l.starts_with("model name") || l.starts_with("Hardware") || l.starts_with("cpu model"))
        .and_then(|l| l.split(':').nth(1))
        .map(|s| s.trim().to_string());
    let cores = info.lines().filter(|l| l.starts_with("processor")).count();
    match model {
        Some(m) => format!("{m} ({cores} logical cores, {})", std::env::consts::OS),
        None => fallback,
    }
}

fn median_us(repeats: usize, batch: usize, mut f: impl FnMut() -> Result<()>) -> Result<Real> {
    let mut samples = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let t = Instant::now();
        f()?;
        samples.push(t.elapsed().as_secs_f64() * 1e6 / batch as Real);
    }
    samples.sort_by(|a, b| a.total_cmp(b));
    let mid = repeats / 2;
    Ok(if repeats % 2 == 1 { samples[mid] } else { 0.5 * (samples[mid - 1] + samples[mid]) })
}

impl Engine {
    /// Confusion, per-class F1, spike counts, saturation, margins and parameter counts.
    pub fn run_diagnostics(&self) -> Result<DiagnosticsBundle> {
        let specs = self.baseline_specs();
        let wanted: Vec<_> = specs.into_iter().filter(|s| s.label == "hybrid-default" || s.label == "stdp-proxy").collect();
        let records = self.run_specs(&wanted)?;
        DiagnosticsBundle::from_records(&records, "hybrid-default", "stdp-proxy", self.digits()?.class_count)
    }

    /// Amortized per-sample latency of both branches over the full test batch.
    pub fn run_timing(&self) -> Result<TimingReport> {
        let ds = self.digits()?;
        let cfg = self.config();
        let split_seed = cfg.split_seeds[0];
        let seed = if cfg.seeds.contains(&REPRESENTATIVE_SEED) { REPRESENTATIVE_SEED } else { cfg.seeds[0] };
        let split = crate::data::stratified_split(&ds.labels, ds.class_count, split_seed)?;
        let streams = RunStreams::new(super::DIGITS_FAMILY, split_seed, seed);
        let hybrid = train_hybrid(ds, &split, &cfg.hybrid(), &streams)?;
        let proxy = proxy_fit(ds, &split, &cfg.proxy(), &streams)?;
        let n = split.test.len();
        let reps = cfg.timing_repeats;
        let enc = cfg.encoder;
        let test_parent = streams.encode_test();

        let entries = vec![
            TimingEntry {
                model: "hybrid".into(),
                stage: "forward".into(),
                median_us_per_sample: median_us(reps, n, || hybrid.model.predict_batch(&hybrid.test_rates).map(drop))?,
            },
            TimingEntry {
                model: "hybrid".into(),
                stage: "end-to-end".into(),
                median_us_per_sample: median_us(reps, n, || {
                    let r = encode_rates(ds, &split.test, &enc, &test_parent)?;
                    hybrid.model.predict_batch(&r).map(drop)
                })?,
            },
            TimingEntry {
                model: "proxy".into(),
                stage: "forward".into(),
                median_us_per_sample: median_us(reps, n, || proxy.model.predict_batch(&proxy.test_rates).map(drop))?,
            },
            TimingEntry {
                model: "proxy".into(),
                stage: "end-to-end".into(),
                median_us_per_sample: median_us(reps, n, || {
                    let r = encode_rates(ds, &split.test, &enc, &test_parent)?;
                    proxy.model.predict_batch(&r).map(drop)
                })?,
            },
        ];
        Ok(TimingReport { hardware: hardware_string(), repeats: reps, batch: n, entries })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::RunDiagnostics;

    fn rec(exp: &str, seed: u64, acc: Real, sat: Option<Real>) -> RunRecord {
        RunRecord {
            experiment: exp.into(),
            split_seed: 2026,
            model_seed: seed,
            accuracy: acc,
            macro_f1: acc / 100.0,
            per_class_f1: vec![acc / 100.0, 1.0],
            spikes_per_sample: Some(10.0),
            expected_spikes_per_sample: Some(10.0),
            epochs: 1,
            diagnostics: RunDiagnostics { param_count: 6, sat_low_pct: sat, ..RunDiagnostics::default() },
            test_labels: vec![0, 1, 1],
            predictions: vec![0, 1, if seed == 23 { 0 } else { 1 }],
        }
    }

    #[test]
    fn bundle_uses_representative_seed() {
        let records = vec![rec("h", 11, 80.0, None), rec("h", 23, 90.0, None), rec("p", 11, 70.0, Some(2.0))];
        let b = DiagnosticsBundle::from_records(&records, "h", "p", 2).unwrap();
        assert_eq!(b.confusion_seed, 23);
        assert_eq!(b.confusion.get(1, 0), 0.5);
        assert_eq!(b.metric("hybrid_accuracy_pct").unwrap().mean, 85.0);
        assert_eq!(b.metric("proxy_sat_low_pct").unwrap().n, 1);
        assert!(b.metric("proxy_winner_margin").is_none());
        assert!((b.per_class_f1_mean[0] - 0.85).abs() < 1e-12);
    }

    #[test]
    fn missing_family_is_an_error() {
        let records = vec![rec("h", 11, 80.0, None)];
        assert!(DiagnosticsBundle::from_records(&records, "h", "p", 2).is_err());
    }

    #[test]
    fn median_of_repeats() {
        let mut calls = 0;
        let m = median_us(5, 1, || {
            calls += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!(calls, 5);
        assert!(m >= 0.0);
    }

    #[test]
    fn hardware_string_nonempty() {
        assert!(!hardware_string().is_empty());
    }
}
