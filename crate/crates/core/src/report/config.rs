//! Plain-text `key = value` suite configuration.

use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::learners::readout::{NormMode, RewardShaping};
use crate::protocol::SuiteConfig;

/// Recognized keys, in canonical rendering order.
pub const KEYS: &[&str] = &[
    "k",
    "sigma",
    "lambda_max",
    "dt",
    "bins",
    "hybrid_epochs",
    "hybrid_lr",
    "shaping",
    "norm",
    "proxy_epochs",
    "baseline_epochs",
    "baseline_lr",
    "temporal_epochs",
    "temporal_lr",
    "temporal_channels",
    "temporal_bins",
    "temporal_burst_len",
    "temporal_burst_rate",
    "temporal_background_rate",
    "temporal_min_gap",
    "temporal_samples",
    "seeds",
    "dominant_seeds",
    "split_seeds",
    "robustness_splits",
    "timing_repeats",
];

fn num<T: FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("cannot parse `{v}` for `{key}`"))
}

/// Parses a comma-separated list of seeds.
pub fn parse_seed_list(v: &str) -> std::result::Result<Vec<u64>, String> {
    let seeds = v
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<u64>().map_err(|_| format!("bad seed `{s}`")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if seeds.is_empty() {
        return Err("empty seed list".into());
    }
    Ok(seeds)
}

fn join(seeds: &[u64]) -> String {
    seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
}

/// Sets one key. Unknown keys are errors.
pub fn apply(cfg: &mut SuiteConfig, key: &str, value: &str) -> std::result::Result<(), String> {
    match key {
        "k" => cfg.encoder.k = num(key, value)?,
        "sigma" => cfg.encoder.sigma = num(key, value)?,
        "lambda_max" => cfg.encoder.lambda_max = num(key, value)?,
        "dt" => cfg.encoder.dt = num(key, value)?,
        "bins" => cfg.encoder.bins = num(key, value)?,
        "hybrid_epochs" => cfg.hybrid_epochs = num(key, value)?,
        "hybrid_lr" => cfg.hybrid_lr = num(key, value)?,
        "shaping" => cfg.shaping = RewardShaping::parse(value).map_err(|e| e.to_string())?,
        "norm" => cfg.norm = NormMode::parse(value).map_err(|e| e.to_string())?,
        "proxy_epochs" => cfg.proxy_epochs = num(key, value)?,
        "baseline_epochs" => cfg.baseline_epochs = num(key, value)?,
        "baseline_lr" => cfg.baseline_lr = num(key, value)?,
        "temporal_epochs" => cfg.temporal_epochs = num(key, value)?,
        "temporal_lr" => cfg.temporal_lr = num(key, value)?,
        "temporal_channels" => cfg.temporal.channels = num(key, value)?,
        "temporal_bins" => cfg.temporal.bins = num(key, value)?,
        "temporal_burst_len" => cfg.temporal.burst_len = num(key, value)?,
        "temporal_burst_rate" => cfg.temporal.burst_rate = num(key, value)?,
        "temporal_background_rate" => cfg.temporal.background_rate = num(key, value)?,
        "temporal_min_gap" => cfg.temporal.min_gap = num(key, value)?,
        "temporal_samples" => cfg.temporal.samples = num(key, value)?,
        "seeds" => cfg.seeds = parse_seed_list(value)?,
        "dominant_seeds" => cfg.dominant_seeds = parse_seed_list(value)?,
        "split_seeds" => cfg.split_seeds = parse_seed_list(value)?,
        "robustness_splits" => cfg.robustness_splits = parse_seed_list(value)?,
        "timing_repeats" => cfg.timing_repeats = num(key, value)?,
        _ => return Err(format!("unknown key `{key}`")),
    }
    Ok(())
}

/// Parses config text on top of the defaults. `#` starts a comment.
pub fn parse_config(text: &str, origin: &Path) -> Result<SuiteConfig> {
    let mut cfg = SuiteConfig::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse { path: origin.to_path_buf(), line: i + 1, msg };
        let (key, value) = line.split_once('=').ok_or_else(|| err("expected `key = value`".into()))?;
        apply(&mut cfg, key.trim(), value.trim()).map_err(err)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<SuiteConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text, path)
}

/// Canonical text form; parsing it reproduces `cfg` exactly.
pub fn render_config(cfg: &SuiteConfig) -> String {
    let t = &cfg.temporal;
    let values: Vec<String> = vec![
        cfg.encoder.k.to_string(),
        cfg.encoder.sigma.to_string(),
        cfg.encoder.lambda_max.to_string(),
        cfg.encoder.dt.to_string(),
        cfg.encoder.bins.to_string(),
        cfg.hybrid_epochs.to_string(),
        cfg.hybrid_lr.to_string(),
        cfg.shaping.label().to_string(),
        cfg.norm.label().to_string(),
        cfg.proxy_epochs.to_string(),
        cfg.baseline_epochs.to_string(),
        cfg.baseline_lr.to_string(),
        cfg.temporal_epochs.to_string(),
        cfg.temporal_lr.to_string(),
        t.channels.to_string(),
        t.bins.to_string(),
        t.burst_len.to_string(),
        t.burst_rate.to_string(),
        t.background_rate.to_string(),
        t.min_gap.to_string(),
        t.samples.to_string(),
        join(&cfg.seeds),
        join(&cfg.dominant_seeds),
        join(&cfg.split_seeds),
        join(&cfg.robustness_splits),
        cfg.timing_repeats.to_string(),
    ];
    KEYS.iter().zip(values).map(|(k, v)| format!("{k} = {v}\n")).collect()
}
