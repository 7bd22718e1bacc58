//! Persistence and presentation of suite results.

pub mod config;
pub mod csv;
pub mod manifest;
pub mod svg;
pub mod tables;

pub use config::{load_config, parse_config, render_config};
pub use csv::emit_raw_csv;
pub use manifest::{verify_manifest, write_manifest, Manifest, MANIFEST_FILE};
pub use svg::{plot_svg, PlotKind};
pub use tables::render_tables;

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::protocol::{hardware_string, DiagnosticsBundle, Engine, RunRecord, SuiteConfig, TimingReport};

/// Hex SHA-256 of the canonical config text.
pub fn config_digest(cfg: &SuiteConfig) -> String {
    hex::encode(Sha256::digest(render_config(cfg).as_bytes()))
}

/// Experiment families and their output file stems.
pub const FAMILIES: [&str; 5] = ["baselines", "ablations", "interaction", "splits", "temporal"];

/// Writes a family CSV; ablation records also produce `trajectories.csv`.
pub fn write_family(dir: &Path, family: &str, records: &[RunRecord]) -> Result<()> {
    emit_raw_csv(dir, family, records)?;
    if family == "ablations" {
        let norm: Vec<RunRecord> = records.iter().filter(|r| r.experiment.starts_with("norm=")).cloned().collect();
        std::fs::write(dir.join("trajectories.csv"), csv::trajectory_csv_string(&norm))?;
    }
    Ok(())
}

pub fn write_diagnostics(dir: &Path, bundle: &DiagnosticsBundle) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("diagnostics.csv"), csv::diagnostics_csv_string(bundle))?;
    std::fs::write(dir.join("confusion.csv"), csv::confusion_csv_string(bundle))?;
    Ok(())
}

pub fn write_timing(dir: &Path, report: &TimingReport) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("timing.csv"), csv::timing_csv_string(report))?;
    Ok(())
}

/// Renders tables and every figure whose inputs exist; returns the figures written.
pub fn render_all(dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let mut written = render_tables(dir)?;
    for kind in PlotKind::ALL {
        if kind.sources().iter().all(|s| dir.join(s).exists()) {
            written.push(plot_svg(kind, dir)?);
        }
    }
    Ok(written)
}

/// Runs the given families (plus diagnostics when asked) into `dir`, then
/// renders tables and figures and writes the manifest.
pub fn run_suite(engine: &Engine, dir: &Path, families: &[&str], diagnostics: bool) -> Result<Manifest> {
    std::fs::create_dir_all(dir)?;
    write_config(dir, engine.config())?;
    for family in families {
        let records = engine.run_family(family)?;
        write_family(dir, family, &records)?;
    }
    if diagnostics {
        write_diagnostics(dir, &engine.run_diagnostics()?)?;
    }
    finish(dir, engine.config())
}

/// Renders whatever results exist in `dir` and rewrites the manifest.
pub fn finish(dir: &Path, cfg: &SuiteConfig) -> Result<Manifest> {
    render_all(dir)?;
    let (_, m) = write_manifest(dir, &config_digest(cfg), &hardware_string())?;
    Ok(m)
}

/// Writes the canonical config next to the results.
pub fn write_config(dir: &Path, cfg: &SuiteConfig) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("config.txt"), render_config(cfg))?;
    Ok(())
}
