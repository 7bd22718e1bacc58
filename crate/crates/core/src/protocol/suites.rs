//! Experiment families built from the suite configuration.

use super::{Branch, ExperimentSpec, SuiteConfig, TEMPORAL_READOUT_BINS};
use crate::learners::readout::{NormMode, NormSchedule, RewardShaping};

/// One ablation row: the varied factor, its setting, and the spec.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationRow {
    pub factor: &'static str,
    pub setting: String,
    pub spec: ExperimentSpec,
}

fn fmt_setting(v: f64) -> String {
    format!("{v}")
}

/// Single-factor hybrid ablations around the default configuration.
///
/// Encoder factors use the 5-seed set; normalization and reward rows use the
/// 9-seed set. `reward=signed` and `norm=on` are both the default config.
pub fn ablation_specs(cfg: &SuiteConfig) -> Vec<AblationRow> {
    let base = cfg.hybrid();
    let mut rows = Vec::new();
    let mut push = |factor: &'static str, setting: String, seeds: &[u64], branch: Branch| {
        let label = format!("{factor}={setting}");
        rows.push(AblationRow { factor, setting, spec: ExperimentSpec::new(label, &cfg.split_seeds, seeds, branch) });
    };
    for k in [1usize, 2, 4, 6] {
        let mut h = base;
        h.encoder.k = k;
        push("K", k.to_string(), &cfg.seeds, Branch::Hybrid(h));
    }
    for sigma in [0.15, 0.25, 0.35] {
        let mut h = base;
        h.encoder.sigma = sigma;
        push("sigma", fmt_setting(sigma), &cfg.seeds, Branch::Hybrid(h));
    }
    for lambda in [100.0, 150.0, 200.0, 250.0] {
        let mut h = base;
        h.encoder.lambda_max = lambda;
        push("lambda_max", fmt_setting(lambda), &cfg.seeds, Branch::Hybrid(h));
    }
    for mode in [NormMode::On, NormMode::Gentle, NormMode::Off] {
        let mut h = base;
        h.schedule = NormSchedule::from_mode(mode);
        push("norm", mode.label().to_string(), &cfg.dominant_seeds, Branch::Hybrid(h));
    }
    for shaping in [RewardShaping::Signed, RewardShaping::PositiveOnly] {
        let mut h = base;
        h.shaping = shaping;
        push("reward", shaping.label().to_string(), &cfg.dominant_seeds, Branch::Hybrid(h));
    }
    rows
}

/// Label of one 2×2 cell.
pub fn interaction_label(mode: NormMode, shaping: RewardShaping) -> String {
    format!("norm-{}/{}", mode.label(), shaping.label())
}

/// Normalization on/off crossed with signed/pos-only shaping, 9 seeds per cell.
pub fn interaction_specs(cfg: &SuiteConfig) -> Vec<ExperimentSpec> {
    let base = cfg.hybrid();
    let mut out = Vec::new();
    for mode in [NormMode::On, NormMode::Off] {
        for shaping in [RewardShaping::Signed, RewardShaping::PositiveOnly] {
            let mut h = base;
            h.schedule = NormSchedule::from_mode(mode);
            h.shaping = shaping;
            out.push(ExperimentSpec::new(
                interaction_label(mode, shaping),
                &cfg.split_seeds,
                &cfg.dominant_seeds,
                Branch::Hybrid(h),
            ));
        }
    }
    out
}

/// Default versus normalization-off on every robustness split, same hyperparameters.
pub fn split_robustness_specs(cfg: &SuiteConfig) -> Vec<ExperimentSpec> {
    let base = cfg.hybrid();
    let mut off = base;
    off.schedule = NormSchedule::off();
    vec![
        ExperimentSpec::new("default", &cfg.robustness_splits, &cfg.seeds, Branch::Hybrid(base)),
        ExperimentSpec::new("norm-off", &cfg.robustness_splits, &cfg.seeds, Branch::Hybrid(off)),
    ]
}

/// Count readout versus time-bin readout, one shared trainer.
pub fn temporal_specs(cfg: &SuiteConfig) -> Vec<ExperimentSpec> {
    let train = cfg.temporal_readout();
    vec![
        ExperimentSpec::new("count", &cfg.split_seeds, &cfg.seeds, Branch::Temporal { bins: 1, train }),
        ExperimentSpec::new(
            "time-bin",
            &cfg.split_seeds,
            &cfg.seeds,
            Branch::Temporal { bins: TEMPORAL_READOUT_BINS, train },
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ablation_grid_shape() {
        let rows = ablation_specs(&SuiteConfig::default());
        assert_eq!(rows.len(), 4 + 3 + 4 + 3 + 2);
        let fives = rows.iter().filter(|r| r.spec.model_seeds.len() == 5).count();
        let nines = rows.iter().filter(|r| r.spec.model_seeds.len() == 9).count();
        assert_eq!((fives, nines), (11, 5));
        let labels: Vec<&str> = rows.iter().map(|r| r.spec.label.as_str()).collect();
        assert!(labels.contains(&"sigma=0.15") && labels.contains(&"lambda_max=250") && labels.contains(&"reward=pos-only"));
    }

    #[test]
    fn each_ablation_varies_one_factor() {
        let cfg = SuiteConfig::default();
        let base = cfg.hybrid();
        for row in ablation_specs(&cfg) {
            let Branch::Hybrid(h) = row.spec.branch else { panic!("hybrid expected") };
            let diffs = [
                h.encoder.k != base.encoder.k,
                h.encoder.sigma != base.encoder.sigma,
                h.encoder.lambda_max != base.encoder.lambda_max,
                h.schedule != base.schedule,
                h.shaping != base.shaping,
            ];
            assert!(diffs.iter().filter(|&&d| d).count() <= 1, "{}", row.spec.label);
        }
    }

    #[test]
    fn default_rows_share_branch() {
        let rows = ablation_specs(&SuiteConfig::default());
        let find = |l: &str| rows.iter().find(|r| r.spec.label == l).unwrap().spec.branch.clone();
        assert_eq!(find("norm=on"), find("reward=signed"));
        assert_eq!(find("K=4"), find("sigma=0.25"));
    }

    #[test]
    fn interaction_cells_share_seeds() {
        let specs = interaction_specs(&SuiteConfig::default());
        assert_eq!(specs.len(), 4);
        assert!(specs.iter().all(|s| s.model_seeds == specs[0].model_seeds && s.model_seeds.len() == 9));
    }

    #[test]
    fn robustness_uses_three_splits() {
        let specs = split_robustness_specs(&SuiteConfig::default());
        assert!(specs.iter().all(|s| s.split_seeds == vec![2026, 2027, 2028]));
    }
}
