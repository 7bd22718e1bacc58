//! Experiment orchestration under the fixed-seed contract.
//!
//! An [`Engine`] owns the loaded data and a run cache keyed by
//! `(branch config, split seed, model seed)`. Every run is a pure function
//! of that key, so suites that share configurations (the default hybrid
//! appears in several tables) reuse results without changing them.

mod diagnostics;
mod suites;

pub use diagnostics::{hardware_string, DiagnosticsBundle, MetricSummary, TimingEntry, TimingReport};
pub use suites::{ablation_specs, interaction_specs, split_robustness_specs, temporal_specs, AblationRow};

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use crate::data::{gen_temporal, stratified_split, SplitIndices, TemporalConfig, TemporalDataset};
use crate::detrng::SeedPath;
use crate::encoding::{binned_features, expected_spike_count, EncoderConfig};
use crate::error::{Error, Result};
use crate::learners::proxy::{proxy_fit, ProxyConfig};
use crate::learners::readout::{
    train_hybrid, train_softmax_baseline, HybridConfig, NormSchedule, RewardShaping, StaticConfig,
};
use crate::learners::{accuracy_pct, encode_rates, RunStreams, TrainTrajectory};
use crate::stats::macro_f1;
use crate::{Dataset, Real};

pub const SEEDS_5: [u64; 5] = [11, 23, 37, 41, 53];
pub const SEEDS_9: [u64; 9] = [11, 23, 37, 41, 53, 67, 79, 83, 97];
pub const PRIMARY_SPLIT: u64 = 2026;
pub const ROBUSTNESS_SPLITS: [u64; 3] = [2026, 2027, 2028];
/// Model seed of the representative trajectory and confusion figures.
pub const REPRESENTATIVE_SEED: u64 = 23;
/// Time bins of the timing-aware temporal readout.
pub const TEMPORAL_READOUT_BINS: usize = 10;

/// Stream family shared by every run on the digits data. Branch settings are
/// not part of the seed path.
pub const DIGITS_FAMILY: &str = "digits";
pub const TEMPORAL_FAMILY: &str = "temporal";

/// Suite-wide settings. One instance drives every experiment; there are no
/// per-seed or per-split overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub encoder: EncoderConfig<Real>,
    pub hybrid_epochs: usize,
    pub hybrid_lr: Real,
    pub shaping: RewardShaping,
    pub norm: crate::learners::readout::NormMode,
    pub proxy_epochs: usize,
    pub baseline_epochs: usize,
    pub baseline_lr: Real,
    pub temporal_epochs: usize,
    pub temporal_lr: Real,
    pub temporal: TemporalConfig,
    pub seeds: Vec<u64>,
    pub dominant_seeds: Vec<u64>,
    pub split_seeds: Vec<u64>,
    pub robustness_splits: Vec<u64>,
    pub timing_repeats: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            encoder: EncoderConfig::default(),
            hybrid_epochs: 18,
            hybrid_lr: 0.003,
            shaping: RewardShaping::Signed,
            norm: crate::learners::readout::NormMode::On,
            proxy_epochs: 9,
            baseline_epochs: 60,
            baseline_lr: 0.01,
            temporal_epochs: 18,
            temporal_lr: 0.003,
            temporal: TemporalConfig::default(),
            seeds: SEEDS_5.to_vec(),
            dominant_seeds: SEEDS_9.to_vec(),
            split_seeds: vec![PRIMARY_SPLIT],
            robustness_splits: ROBUSTNESS_SPLITS.to_vec(),
            timing_repeats: 100,
        }
    }
}

impl SuiteConfig {
    pub fn hybrid(&self) -> HybridConfig<Real> {
        HybridConfig {
            epochs: self.hybrid_epochs,
            lr: self.hybrid_lr,
            shaping: self.shaping,
            schedule: NormSchedule::from_mode(self.norm),
            encoder: self.encoder,
        }
    }

    pub fn proxy(&self) -> ProxyConfig<Real> {
        ProxyConfig { epochs: self.proxy_epochs, encoder: self.encoder, ..ProxyConfig::default() }
    }

    pub fn baseline(&self) -> StaticConfig<Real> {
        StaticConfig { epochs: self.baseline_epochs, lr: self.baseline_lr, ..StaticConfig::default() }
    }

    /// Trainer shared by both temporal readouts.
    pub fn temporal_readout(&self) -> StaticConfig<Real> {
        StaticConfig { epochs: self.temporal_epochs, lr: self.temporal_lr, ..StaticConfig::default() }
    }

    pub fn validate(&self) -> Result<()> {
        self.encoder.validate()?;
        self.temporal.validate()?;
        if self.seeds.is_empty() || self.dominant_seeds.is_empty() || self.split_seeds.is_empty() {
            return Err(Error::InvalidConfig("seed lists must be nonempty".into()));
        }
        if self.timing_repeats == 0 {
            return Err(Error::InvalidConfig("timing_repeats must be positive".into()));
        }
        Ok(())
    }
}

/// What a run trains and how it is evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum Branch {
    /// Re-encoding delta-rule readout on spike counts.
    Hybrid(HybridConfig<Real>),
    /// Competitive prototype learner.
    Proxy(ProxyConfig<Real>),
    /// Static delta-rule softmax on normalized pixels.
    SoftmaxPixels(StaticConfig<Real>),
    /// Static delta-rule softmax on one fixed spike-count encoding.
    SoftmaxRates { encoder: EncoderConfig<Real>, train: StaticConfig<Real> },
    /// Delta-rule readout on the temporal task with `bins` time windows (1 = counts only).
    Temporal { bins: usize, train: StaticConfig<Real> },
}

impl Branch {
    fn uses_digits(&self) -> bool {
        !matches!(self, Branch::Temporal { .. })
    }

    fn family(&self) -> &'static str {
        if self.uses_digits() {
            DIGITS_FAMILY
        } else {
            TEMPORAL_FAMILY
        }
    }
}

/// One experiment: one branch configuration over a seed grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub label: String,
    pub split_seeds: Vec<u64>,
    pub model_seeds: Vec<u64>,
    pub branch: Branch,
}

impl ExperimentSpec {
    pub fn new(label: impl Into<String>, split_seeds: &[u64], model_seeds: &[u64], branch: Branch) -> Self {
        Self { label: label.into(), split_seeds: split_seeds.to_vec(), model_seeds: model_seeds.to_vec(), branch }
    }
}

/// Per-run diagnostics beyond accuracy.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunDiagnostics {
    pub param_count: usize,
    pub sat_low_pct: Option<Real>,
    pub sat_high_pct: Option<Real>,
    pub winner_margin: Option<Real>,
    pub trajectory: Option<TrainTrajectory<Real>>,
}

/// Result of one `(experiment, split seed, model seed)` run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub experiment: String,
    pub split_seed: u64,
    pub model_seed: u64,
    pub accuracy: Real,
    pub macro_f1: Real,
    pub per_class_f1: Vec<Real>,
    /// Mean spikes per encoded test sample.
    pub spikes_per_sample: Option<Real>,
    /// Analytic mean spikes per test sample.
    pub expected_spikes_per_sample: Option<Real>,
    pub epochs: usize,
    pub diagnostics: RunDiagnostics,
    pub test_labels: Vec<usize>,
    pub predictions: Vec<usize>,
}

/// Sorts records by `(split_seed, model_seed)`, the canonical reduction order.
pub fn sort_records(records: &mut [RunRecord]) {
    records.sort_by(|a, b| {
        (a.experiment.as_str(), a.split_seed, a.model_seed).cmp(&(b.experiment.as_str(), b.split_seed, b.model_seed))
    });
}

/// Accuracies of one experiment in canonical order.
pub fn accuracies(records: &[RunRecord], experiment: &str) -> Vec<Real> {
    let mut sel: Vec<&RunRecord> = records.iter().filter(|r| r.experiment == experiment).collect();
    sel.sort_by_key(|r| (r.split_seed, r.model_seed));
    sel.into_iter().map(|r| r.accuracy).collect()
}

type RunKey = (String, u64, u64);

pub struct Engine {
    cfg: SuiteConfig,
    digits: Option<Arc<Dataset>>,
    temporal: Mutex<Option<Arc<TemporalDataset>>>,
    splits: Mutex<HashMap<(usize, u64), Arc<SplitIndices>>>,
    cache: Mutex<HashMap<RunKey, RunRecord>>,
}

impl Engine {
    /// `digits` may be `None` when only the temporal benchmark is needed.
    pub fn new(cfg: SuiteConfig, digits: Option<Dataset>) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            digits: digits.map(Arc::new),
            temporal: Mutex::new(None),
            splits: Mutex::new(HashMap::new()),
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn config(&self) -> &SuiteConfig {
        &self.cfg
    }

    pub fn digits(&self) -> Result<&Dataset> {
        self.digits.as_deref().ok_or(Error::MissingExperiment("digits dataset not loaded".into()))
    }

    pub fn temporal_dataset(&self) -> Result<Arc<TemporalDataset>> {
        let mut slot = self.temporal.lock().expect("poisoned");
        if let Some(ds) = slot.as_ref() {
            return Ok(ds.clone());
        }
        let stream = SeedPath::root("temporal-synth", 0).resolve();
        let ds = Arc::new(gen_temporal(&self.cfg.temporal, &stream)?);
        *slot = Some(ds.clone());
        Ok(ds)
    }

    fn split_for(&self, labels: &[usize], classes: usize, split_seed: u64, key: usize) -> Result<Arc<SplitIndices>> {
        if let Some(s) = self.splits.lock().expect("poisoned").get(&(key, split_seed)) {
            return Ok(s.clone());
        }
        let split = Arc::new(stratified_split(labels, classes, split_seed)?);
        self.splits.lock().expect("poisoned").insert((key, split_seed), split.clone());
        Ok(split)
    }

    /// All `(split, model)` runs of `spec`, sorted by `(split_seed, model_seed)`.
    pub fn run_experiment(&self, spec: &ExperimentSpec) -> Result<Vec<RunRecord>> {
        let grid: Vec<(u64, u64)> = spec
            .split_seeds
            .iter()
            .flat_map(|&s| spec.model_seeds.iter().map(move |&m| (s, m)))
            .collect();
        let mut records = grid
            .par_iter()
            .map(|&(split, model)| self.run_one(spec, split, model))
            .collect::<Result<Vec<_>>>()?;
        records.sort_by_key(|r| (r.split_seed, r.model_seed));
        Ok(records)
    }

    /// One run, from the cache when the same branch/split/model was already trained.
    pub fn run_one(&self, spec: &ExperimentSpec, split_seed: u64, model_seed: u64) -> Result<RunRecord> {
        let key = (format!("{:?}", spec.branch), split_seed, model_seed);
        if let Some(hit) = self.cache.lock().expect("poisoned").get(&key) {
            return Ok(RunRecord { experiment: spec.label.clone(), ..hit.clone() });
        }
        let mut record = self.execute(&spec.branch, split_seed, model_seed)?;
        record.experiment = spec.label.clone();
        self.cache.lock().expect("poisoned").insert(key, record.clone());
        Ok(record)
    }

    fn execute(&self, branch: &Branch, split_seed: u64, model_seed: u64) -> Result<RunRecord> {
        let streams = RunStreams::new(branch.family(), split_seed, model_seed);
        match branch {
            Branch::Temporal { bins, train } => self.execute_temporal(*bins, train, split_seed, model_seed, &streams),
            _ => self.execute_digits(branch, split_seed, model_seed, &streams),
        }
    }

    fn execute_digits(&self, branch: &Branch, split_seed: u64, model_seed: u64, streams: &RunStreams) -> Result<RunRecord> {
        let ds = self.digits()?;
        let split = self.split_for(&ds.labels, ds.class_count, split_seed, 0)?;
        let test_labels: Vec<usize> = split.test.iter().map(|&i| ds.labels[i]).collect();
        let train_labels: Vec<usize> = split.train.iter().map(|&i| ds.labels[i]).collect();
        let mut diagnostics = RunDiagnostics::default();
        let mut encoder = None;
        let (predictions, test_rates, epochs) = match branch {
            Branch::Hybrid(cfg) => {
                let run = train_hybrid(ds, &split, cfg, streams)?;
                diagnostics.param_count = run.model.param_count();
                diagnostics.trajectory = Some(run.trajectory);
                encoder = Some(cfg.encoder);
                (run.model.predict_batch(&run.test_rates)?, Some(run.test_rates), cfg.epochs)
            }
            Branch::Proxy(cfg) => {
                let run = proxy_fit(ds, &split, cfg, streams)?;
                let (lo, hi) = run.model.saturation_pct();
                let margins = run.test_rates.iter().map(|x| run.model.margin(x)).collect::<Result<Vec<_>>>()?;
                diagnostics.param_count = run.model.param_count();
                diagnostics.sat_low_pct = Some(lo);
                diagnostics.sat_high_pct = Some(hi);
                diagnostics.winner_margin = Some(crate::stats::mean(&margins));
                encoder = Some(cfg.encoder);
                (run.model.predict_batch(&run.test_rates)?, Some(run.test_rates), cfg.epochs)
            }
            Branch::SoftmaxPixels(train) => {
                let tr: Vec<Vec<Real>> = split.train.iter().map(|&i| ds.sample(i).to_vec()).collect();
                let te: Vec<Vec<Real>> = split.test.iter().map(|&i| ds.sample(i).to_vec()).collect();
                let model = train_softmax_baseline(&tr, &train_labels, ds.class_count, train, streams)?;
                diagnostics.param_count = model.param_count();
                (model.predict_batch(&te)?, None, train.epochs)
            }
            Branch::SoftmaxRates { encoder: enc, train } => {
                let tr = encode_rates(ds, &split.train, enc, &streams.encode_train(0))?;
                let te = encode_rates(ds, &split.test, enc, &streams.encode_test())?;
                let model = train_softmax_baseline(&tr, &train_labels, ds.class_count, train, streams)?;
                diagnostics.param_count = model.param_count();
                encoder = Some(*enc);
                (model.predict_batch(&te)?, Some(te), train.epochs)
            }
            Branch::Temporal { .. } => unreachable!("temporal runs are dispatched separately"),
        };
        let (spikes, expected) = match (test_rates, encoder) {
            (Some(rates), Some(enc)) => {
                let total: Real = rates.iter().flatten().sum();
                let mut analytic = 0.0;
                for &i in &split.test {
                    analytic += expected_spike_count(ds.sample(i), &enc)?;
                }
                let n = rates.len() as Real;
                (Some(total / n), Some(analytic / n))
            }
            _ => (None, None),
        };
        let (mf1, per_class) = macro_f1::<Real>(&test_labels, &predictions, ds.class_count)?;
        Ok(RunRecord {
            experiment: String::new(),
            split_seed,
            model_seed,
            accuracy: accuracy_pct(&test_labels, &predictions),
            macro_f1: mf1,
            per_class_f1: per_class,
            spikes_per_sample: spikes,
            expected_spikes_per_sample: expected,
            epochs,
            diagnostics,
            test_labels,
            predictions,
        })
    }

    fn execute_temporal(
        &self,
        bins: usize,
        train: &StaticConfig<Real>,
        split_seed: u64,
        model_seed: u64,
        streams: &RunStreams,
    ) -> Result<RunRecord> {
        let ds = self.temporal_dataset()?;
        let split = self.split_for(&ds.labels, TemporalDataset::CLASS_COUNT, split_seed, 1)?;
        let features = |i: usize| -> Result<Vec<Real>> {
            Ok(binned_features(&ds.rasters[i], bins)?.into_iter().map(Real::from).collect())
        };
        let tr = split.train.iter().map(|&i| features(i)).collect::<Result<Vec<_>>>()?;
        let te = split.test.iter().map(|&i| features(i)).collect::<Result<Vec<_>>>()?;
        let train_labels: Vec<usize> = split.train.iter().map(|&i| ds.labels[i]).collect();
        let test_labels: Vec<usize> = split.test.iter().map(|&i| ds.labels[i]).collect();
        let model = train_softmax_baseline(&tr, &train_labels, TemporalDataset::CLASS_COUNT, train, streams)?;
        let predictions = model.predict_batch(&te)?;
        let (mf1, per_class) = macro_f1::<Real>(&test_labels, &predictions, TemporalDataset::CLASS_COUNT)?;
        let spikes = te.iter().flatten().sum::<Real>() / te.len() as Real;
        Ok(RunRecord {
            experiment: String::new(),
            split_seed,
            model_seed,
            accuracy: accuracy_pct(&test_labels, &predictions),
            macro_f1: mf1,
            per_class_f1: per_class,
            spikes_per_sample: Some(spikes),
            expected_spikes_per_sample: None,
            epochs: train.epochs,
            diagnostics: RunDiagnostics { param_count: model.param_count(), ..RunDiagnostics::default() },
            test_labels,
            predictions,
        })
    }

    /// Baseline table: softmax controls, hybrid default and the proxy.
    pub fn baseline_specs(&self) -> Vec<ExperimentSpec> {
        let c = &self.cfg;
        vec![
            ExperimentSpec::new("logreg-pixels", &c.split_seeds, &c.seeds, Branch::SoftmaxPixels(c.baseline())),
            ExperimentSpec::new(
                "logreg-rates",
                &c.split_seeds,
                &c.seeds,
                Branch::SoftmaxRates { encoder: c.encoder, train: c.baseline() },
            ),
            ExperimentSpec::new("hybrid-default", &c.split_seeds, &c.seeds, Branch::Hybrid(c.hybrid())),
            ExperimentSpec::new("stdp-proxy", &c.split_seeds, &c.seeds, Branch::Proxy(c.proxy())),
        ]
    }

    pub fn run_specs(&self, specs: &[ExperimentSpec]) -> Result<Vec<RunRecord>> {
        let mut out = Vec::new();
        for spec in specs {
            out.extend(self.run_experiment(spec)?);
        }
        Ok(out)
    }

    pub fn run_baselines(&self) -> Result<Vec<RunRecord>> {
        self.run_specs(&self.baseline_specs())
    }

    pub fn run_ablation_grid(&self) -> Result<Vec<RunRecord>> {
        let specs: Vec<ExperimentSpec> = ablation_specs(&self.cfg).into_iter().map(|r| r.spec).collect();
        self.run_specs(&specs)
    }

    pub fn run_interaction_2x2(&self) -> Result<Vec<RunRecord>> {
        self.run_specs(&interaction_specs(&self.cfg))
    }

    pub fn run_split_robustness(&self) -> Result<Vec<RunRecord>> {
        self.run_specs(&split_robustness_specs(&self.cfg))
    }

    pub fn run_temporal_benchmark(&self) -> Result<Vec<RunRecord>> {
        self.run_specs(&temporal_specs(&self.cfg))
    }

    /// Runs one family by name: `baselines`, `ablations`, `interaction`, `splits` or `temporal`.
    pub fn run_family(&self, family: &str) -> Result<Vec<RunRecord>> {
        match family {
            "baselines" => self.run_baselines(),
            "ablations" => self.run_ablation_grid(),
            "interaction" => self.run_interaction_2x2(),
            "splits" => self.run_split_robustness(),
            "temporal" => self.run_temporal_benchmark(),
            other => Err(Error::InvalidArgument(format!("unknown experiment family `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_temporal_engine() -> Engine {
        let cfg = SuiteConfig {
            temporal: TemporalConfig { samples: 200, ..TemporalConfig::default() },
            temporal_epochs: 3,
            seeds: vec![11, 23],
            ..SuiteConfig::default()
        };
        Engine::new(cfg, None).unwrap()
    }

    #[test]
    fn temporal_runs_without_digits_and_are_deterministic() {
        let a = tiny_temporal_engine().run_temporal_benchmark().unwrap();
        let b = tiny_temporal_engine().run_temporal_benchmark().unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 4);
        assert!(a.iter().all(|r| (0.0..=100.0).contains(&r.accuracy) && (0.0..=1.0).contains(&r.macro_f1)));
    }

    #[test]
    fn digits_required_for_digit_branches() {
        let e = tiny_temporal_engine();
        assert!(e.run_baselines().is_err());
    }

    #[test]
    fn cache_relabels_without_recomputing() {
        let e = tiny_temporal_engine();
        let branch = Branch::Temporal { bins: 1, train: e.config().temporal_readout() };
        let a = e.run_experiment(&ExperimentSpec::new("a", &[2026], &[11], branch.clone())).unwrap();
        let b = e.run_experiment(&ExperimentSpec::new("b", &[2026], &[11], branch)).unwrap();
        assert_eq!(b[0].experiment, "b");
        assert_eq!(RunRecord { experiment: "a".into(), ..b[0].clone() }, a[0]);
    }

    #[test]
    fn invalid_config_rejected() {
        let cfg = SuiteConfig { seeds: vec![], ..SuiteConfig::default() };
        assert!(Engine::new(cfg, None).is_err());
    }
}
