//! Raw per-seed CSV files: writing and reading back.
//!
//! Reals are written with exactly six fractional digits, rows are sorted by
//! `(experiment order, split_seed, model_seed)` and lines end in LF.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::protocol::{DiagnosticsBundle, RunRecord, TimingReport};
use crate::Real;

pub const RAW_HEADER: &str = "experiment,split_seed,model_seed,accuracy_pct,macro_f1,spikes_per_sample,\
expected_spikes_per_sample,epochs,param_count,sat_low_pct,sat_high_pct,winner_margin,per_class_f1";
pub const TRAJECTORY_HEADER: &str = "experiment,split_seed,model_seed,epoch,accuracy_pct,mean_row_norm";
pub const DIAGNOSTICS_HEADER: &str = "metric,mean,std,n";

pub fn fmt6(v: Real) -> String {
    let s = format!("{v:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}

fn opt6(v: Option<Real>) -> String {
    v.map(fmt6).unwrap_or_default()
}

/// One parsed row of a raw results CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub experiment: String,
    pub split_seed: u64,
    pub model_seed: u64,
    pub accuracy: Real,
    pub macro_f1: Real,
    pub spikes_per_sample: Option<Real>,
    pub expected_spikes_per_sample: Option<Real>,
    pub epochs: usize,
    pub param_count: usize,
    pub sat_low_pct: Option<Real>,
    pub sat_high_pct: Option<Real>,
    pub winner_margin: Option<Real>,
    pub per_class_f1: Vec<Real>,
}

/// Renders records in first-appearance experiment order, each experiment
/// sorted by `(split_seed, model_seed)`.
pub fn raw_csv_string(records: &[RunRecord]) -> String {
    let mut order: Vec<&str> = Vec::new();
    for r in records {
        if !order.contains(&r.experiment.as_str()) {
            order.push(&r.experiment);
        }
    }
    let mut out = String::from(RAW_HEADER);
    out.push('\n');
    for exp in order {
        let mut rows: Vec<&RunRecord> = records.iter().filter(|r| r.experiment == exp).collect();
        rows.sort_by_key(|r| (r.split_seed, r.model_seed));
        for r in rows {
            let d = &r.diagnostics;
            let f1: Vec<String> = r.per_class_f1.iter().map(|&v| fmt6(v)).collect();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.experiment,
                r.split_seed,
                r.model_seed,
                fmt6(r.accuracy),
                fmt6(r.macro_f1),
                opt6(r.spikes_per_sample),
                opt6(r.expected_spikes_per_sample),
                r.epochs,
                d.param_count,
                opt6(d.sat_low_pct),
                opt6(d.sat_high_pct),
                opt6(d.winner_margin),
                f1.join(";"),
            );
        }
    }
    out
}

/// Writes `<dir>/<family>.csv`. Empty record sets are rejected.
pub fn emit_raw_csv(dir: &Path, family: &str, records: &[RunRecord]) -> Result<std::path::PathBuf> {
    if records.is_empty() {
        return Err(Error::MissingExperiment(format!("no records for {family}")));
    }
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("{family}.csv"));
    std::fs::write(&path, raw_csv_string(records))?;
    Ok(path)
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), line, msg: msg.into() }
}

/// Splits a CSV file into data rows after checking the header.
fn data_lines<'a>(path: &Path, text: &'a str, header: &str) -> Result<Vec<(usize, Vec<&'a str>)>> {
    let mut lines = text.lines();
    if lines.next() != Some(header) {
        return Err(parse_err(path, 1, "unexpected header"));
    }
    let width = header.split(',').count();
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            let cells: Vec<&str> = l.split(',').collect();
            if cells.len() != width {
                return Err(parse_err(path, i + 2, format!("expected {width} cells, found {}", cells.len())));
            }
            Ok((i + 2, cells))
        })
        .collect()
}

fn cell<T: std::str::FromStr>(path: &Path, line: usize, v: &str) -> Result<T> {
    v.parse().map_err(|_| parse_err(path, line, format!("bad value `{v}`")))
}

fn opt_cell(path: &Path, line: usize, v: &str) -> Result<Option<Real>> {
    if v.is_empty() {
        Ok(None)
    } else {
        cell(path, line, v).map(Some)
    }
}

pub fn parse_raw_csv(path: &Path, text: &str) -> Result<Vec<CsvRow>> {
    data_lines(path, text, RAW_HEADER)?
        .into_iter()
        .map(|(ln, c)| {
            let per_class_f1 = if c[12].is_empty() {
                Vec::new()
            } else {
                c[12].split(';').map(|v| cell(path, ln, v)).collect::<Result<Vec<Real>>>()?
            };
            Ok(CsvRow {
                experiment: c[0].to_string(),
                split_seed: cell(path, ln, c[1])?,
                model_seed: cell(path, ln, c[2])?,
                accuracy: cell(path, ln, c[3])?,
                macro_f1: cell(path, ln, c[4])?,
                spikes_per_sample: opt_cell(path, ln, c[5])?,
                expected_spikes_per_sample: opt_cell(path, ln, c[6])?,
                epochs: cell(path, ln, c[7])?,
                param_count: cell(path, ln, c[8])?,
                sat_low_pct: opt_cell(path, ln, c[9])?,
                sat_high_pct: opt_cell(path, ln, c[10])?,
                winner_margin: opt_cell(path, ln, c[11])?,
                per_class_f1,
            })
        })
        .collect()
}

pub fn read_raw_csv(path: &Path) -> Result<Vec<CsvRow>> {
    parse_raw_csv(path, &std::fs::read_to_string(path)?)
}

/// One epoch of a training trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub experiment: String,
    pub split_seed: u64,
    pub model_seed: u64,
    pub epoch: usize,
    pub accuracy: Real,
    pub mean_row_norm: Real,
}

/// Per-epoch trajectories of every record that carries one.
pub fn trajectory_csv_string(records: &[RunRecord]) -> String {
    let mut out = String::from(TRAJECTORY_HEADER);
    out.push('\n');
    let mut rows: Vec<&RunRecord> = records.iter().filter(|r| r.diagnostics.trajectory.is_some()).collect();
    rows.sort_by(|a, b| (&a.experiment, a.split_seed, a.model_seed).cmp(&(&b.experiment, b.split_seed, b.model_seed)));
    for r in rows {
        let t = r.diagnostics.trajectory.as_ref().expect("filtered");
        for (e, (a, n)) in t.accuracy.iter().zip(&t.mean_row_norm).enumerate() {
            let _ = writeln!(out, "{},{},{},{},{},{}", r.experiment, r.split_seed, r.model_seed, e + 1, fmt6(*a), fmt6(*n));
        }
    }
    out
}

pub fn read_trajectory_csv(path: &Path) -> Result<Vec<TrajectoryRow>> {
    let text = std::fs::read_to_string(path)?;
    data_lines(path, &text, TRAJECTORY_HEADER)?
        .into_iter()
        .map(|(ln, c)| {
            Ok(TrajectoryRow {
                experiment: c[0].to_string(),
                split_seed: cell(path, ln, c[1])?,
                model_seed: cell(path, ln, c[2])?,
                epoch: cell(path, ln, c[3])?,
                accuracy: cell(path, ln, c[4])?,
                mean_row_norm: cell(path, ln, c[5])?,
            })
        })
        .collect()
}

/// `metric,mean,std,n` rows, per-class F1 included as `hybrid_f1_class_<c>`.
pub fn diagnostics_csv_string(b: &DiagnosticsBundle) -> String {
    let mut out = String::from(DIAGNOSTICS_HEADER);
    out.push('\n');
    for m in &b.metrics {
        let _ = writeln!(out, "{},{},{},{}", m.name, fmt6(m.mean), fmt6(m.std), m.n);
    }
    let n = b.metrics.iter().find(|m| m.name == "hybrid_accuracy_pct").map_or(0, |m| m.n);
    for (c, (mu, sd)) in b.per_class_f1_mean.iter().zip(&b.per_class_f1_std).enumerate() {
        let _ = writeln!(out, "hybrid_f1_class_{c},{},{},{n}", fmt6(*mu), fmt6(*sd));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticRow {
    pub metric: String,
    pub mean: Real,
    pub std: Real,
    pub n: usize,
}

pub fn read_diagnostics_csv(path: &Path) -> Result<Vec<DiagnosticRow>> {
    let text = std::fs::read_to_string(path)?;
    data_lines(path, &text, DIAGNOSTICS_HEADER)?
        .into_iter()
        .map(|(ln, c)| {
            Ok(DiagnosticRow {
                metric: c[0].to_string(),
                mean: cell(path, ln, c[1])?,
                std: cell(path, ln, c[2])?,
                n: cell(path, ln, c[3])?,
            })
        })
        .collect()
}

/// Row-normalized confusion with the run it came from.
pub fn confusion_csv_string(b: &DiagnosticsBundle) -> String {
    let k = b.confusion.cols();
    let mut out = String::from("split_seed,model_seed,true_class");
    for c in 0..k {
        let _ = write!(out, ",pred_{c}");
    }
    out.push('\n');
    for (t, row) in b.confusion.row_iter().enumerate() {
        let _ = write!(out, "{},{},{t}", b.confusion_split, b.confusion_seed);
        for &v in row {
            let _ = write!(out, ",{}", fmt6(v));
        }
        out.push('\n');
    }
    out
}

/// Confusion matrix plus `(split_seed, model_seed)`.
pub fn read_confusion_csv(path: &Path) -> Result<(u64, u64, Vec<Vec<Real>>)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let k = header.split(',').count().saturating_sub(3);
    if !header.starts_with("split_seed,model_seed,true_class") || k == 0 {
        return Err(parse_err(path, 1, "unexpected header"));
    }
    let mut ids = (0, 0);
    let mut rows = Vec::with_capacity(k);
    for (i, l) in lines.enumerate() {
        let c: Vec<&str> = l.split(',').collect();
        if c.len() != k + 3 {
            return Err(parse_err(path, i + 2, "wrong cell count"));
        }
        ids = (cell(path, i + 2, c[0])?, cell(path, i + 2, c[1])?);
        rows.push(c[3..].iter().map(|v| cell(path, i + 2, v)).collect::<Result<Vec<Real>>>()?);
    }
    if rows.len() != k {
        return Err(parse_err(path, 1, "confusion matrix is not square"));
    }
    Ok((ids.0, ids.1, rows))
}

pub fn timing_csv_string(t: &TimingReport) -> String {
    let mut out = String::from("model,stage,median_us_per_sample,repeats,batch,hardware\n");
    for e in &t.entries {
        let _ = writeln!(
            out,
            "{},{},{},{},{},\"{}\"",
            e.model,
            e.stage,
            fmt6(e.median_us_per_sample),
            t.repeats,
            t.batch,
            t.hardware.replace('"', "'")
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::TrainTrajectory;
    use crate::protocol::RunDiagnostics;

    fn rec(exp: &str, split: u64, seed: u64, acc: Real) -> RunRecord {
        RunRecord {
            experiment: exp.into(),
            split_seed: split,
            model_seed: seed,
            accuracy: acc,
            macro_f1: 0.5,
            per_class_f1: vec![0.25, 0.75],
            spikes_per_sample: Some(2420.123456789),
            expected_spikes_per_sample: None,
            epochs: 18,
            diagnostics: RunDiagnostics {
                param_count: 2570,
                trajectory: Some(TrainTrajectory { accuracy: vec![50.0, 60.0], mean_row_norm: vec![1.0, 0.98] }),
                ..RunDiagnostics::default()
            },
            test_labels: vec![],
            predictions: vec![],
        }
    }

    #[test]
    fn rows_sorted_and_formatted() {
        let recs = vec![rec("a", 2027, 11, 90.0), rec("a", 2026, 23, 80.0), rec("a", 2026, 11, 1.0 / 3.0)];
        let s = raw_csv_string(&recs);
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], RAW_HEADER);
        assert!(lines[1].starts_with("a,2026,11,0.333333,0.500000,2420.123457,,18,2570,,,,0.250000;0.750000"));
        assert!(lines[2].starts_with("a,2026,23,"));
        assert!(lines[3].starts_with("a,2027,11,"));
        assert!(s.ends_with('\n') && !s.contains('\r'));
    }

    #[test]
    fn roundtrip_within_formatting_tolerance() {
        let recs = vec![rec("x", 2026, 11, 86.38888888), rec("y", 2026, 11, 12.5)];
        let rows = parse_raw_csv(Path::new("t"), &raw_csv_string(&recs)).unwrap();
        assert_eq!(rows.len(), 2);
        assert!((rows[0].accuracy - 86.38888888).abs() < 1e-6);
        assert_eq!(rows[1].experiment, "y");
        assert_eq!(rows[0].expected_spikes_per_sample, None);
        assert_eq!(rows[0].per_class_f1, vec![0.25, 0.75]);
    }

    #[test]
    fn malformed_rows_rejected() {
        assert!(parse_raw_csv(Path::new("t"), "bad header\n").is_err());
        let text = format!("{RAW_HEADER}\na,1,2\n");
        assert!(parse_raw_csv(Path::new("t"), &text).is_err());
    }

    #[test]
    fn trajectories_listed_per_epoch() {
        let s = trajectory_csv_string(&[rec("norm=on", 2026, 23, 1.0)]);
        assert_eq!(s.lines().count(), 3);
        assert!(s.contains("norm=on,2026,23,2,60.000000,0.980000"));
    }

    #[test]
    fn negative_zero_normalized() {
        assert_eq!(fmt6(-0.0000001), "0.000000");
    }

    #[test]
    fn empty_emit_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(emit_raw_csv(dir.path(), "x", &[]).is_err());
        assert!(!dir.path().join("x.csv").exists());
    }
}
