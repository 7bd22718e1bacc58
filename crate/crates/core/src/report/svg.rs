//! Deterministic SVG 1.1 figures built from the raw CSVs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::csv::{read_confusion_csv, read_raw_csv, read_trajectory_csv, CsvRow, TrajectoryRow};
use crate::error::{Error, Result};
use crate::protocol::{PRIMARY_SPLIT, REPRESENTATIVE_SEED};
use crate::stats::{mean, sample_std};
use crate::Real;

const W: Real = 640.0;
const H: Real = 400.0;
const LEFT: Real = 64.0;
const RIGHT: Real = 150.0;
const TOP: Real = 40.0;
const BOTTOM: Real = 52.0;
const PALETTE: [&str; 5] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// Test accuracy per epoch, norm on vs off, representative seed.
    TrajectoryOverlay,
    /// Per-condition mean bars with one point per seed.
    SeedBars,
    /// Mean class-row norm per epoch for each normalization schedule, mean ± std band.
    NormSchedule,
    /// Row-normalized confusion heatmap.
    Confusion,
}

impl PlotKind {
    pub const ALL: [PlotKind; 4] = [Self::TrajectoryOverlay, Self::SeedBars, Self::NormSchedule, Self::Confusion];

    pub fn file_name(self) -> &'static str {
        match self {
            Self::TrajectoryOverlay => "fig_trajectory.svg",
            Self::SeedBars => "fig_seed_bars.svg",
            Self::NormSchedule => "fig_norm_schedule.svg",
            Self::Confusion => "fig_confusion.svg",
        }
    }

    /// CSV files the plot reads.
    pub fn sources(self) -> &'static [&'static str] {
        match self {
            Self::TrajectoryOverlay | Self::NormSchedule => &["trajectories.csv"],
            Self::SeedBars => &["ablations.csv"],
            Self::Confusion => &["confusion.csv"],
        }
    }
}

fn n2(v: Real) -> String {
    format!("{v:.2}")
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    x0: Real,
    x1: Real,
    y0: Real,
    y1: Real,
}

impl Frame {
    fn px(&self, x: Real) -> Real {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: Real) -> Real {
        H - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (H - TOP - BOTTOM)
    }
}

fn open(title: &str) -> String {
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">"
    );
    let _ = writeln!(s, "<rect x=\"0\" y=\"0\" width=\"{W}\" height=\"{H}\" fill=\"#ffffff\"/>");
    let _ = writeln!(s, "<text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{}</text>", n2(W / 2.0), esc(title));
    s
}

fn close(mut s: String) -> String {
    s.push_str("</svg>\n");
    s
}

/// Round-number ticks (steps of 1, 2 or 5 × 10^k) covering `[lo, hi]`, and the widened range.
fn nice_axis(lo: Real, hi: Real, target: usize) -> (Real, Real, Vec<Real>) {
    let span = (hi - lo).max(1e-9);
    let raw = span / target as Real;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|&s| s >= raw).unwrap_or(10.0 * mag);
    let start = (lo / step).floor() * step;
    let end = (hi / step).ceil() * step;
    let n = ((end - start) / step).round() as usize;
    let ticks = (0..=n).map(|i| start + step * i as Real).collect();
    (start, end, ticks)
}

/// Epoch axis with integer ticks.
fn epoch_axis(epochs: usize) -> (Real, Real, Vec<Real>) {
    let last = epochs.max(2);
    let step = if last <= 10 { 1 } else if last <= 25 { 2 } else { 5 };
    let mut ticks: Vec<Real> = (1..=last).filter(|e| e % step == 0 || *e == 1).map(|e| e as Real).collect();
    ticks.dedup();
    (1.0, last as Real, ticks)
}

fn axes(s: &mut String, f: &Frame, xlabel: &str, ylabel: &str, xticks: &[Real], yticks: &[Real]) {
    let (bx, by) = (f.px(f.x0), f.py(f.y0));
    let _ = writeln!(
        s,
        "<path d=\"M{} {} L{} {} M{} {} L{} {}\" stroke=\"#000000\" fill=\"none\"/>",
        n2(bx),
        n2(f.py(f.y1)),
        n2(bx),
        n2(by),
        n2(bx),
        n2(by),
        n2(f.px(f.x1)),
        n2(by)
    );
    for &t in xticks {
        let x = f.px(t);
        let _ = writeln!(s, "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#000000\"/>", n2(x), n2(by), n2(by + 4.0));
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>", n2(x), n2(by + 17.0), trim_num(t));
    }
    for &t in yticks {
        let y = f.py(t);
        let _ = writeln!(s, "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"#000000\"/>", n2(bx - 4.0), n2(y), n2(bx));
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>", n2(bx - 7.0), n2(y + 4.0), trim_num(t));
    }
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>", n2(f.px((f.x0 + f.x1) / 2.0)), n2(H - 12.0), esc(xlabel));
    let cy = n2(f.py((f.y0 + f.y1) / 2.0));
    let _ = writeln!(s, "<text x=\"16\" y=\"{cy}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {cy})\">{}</text>", esc(ylabel));
}

fn trim_num(v: Real) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

fn legend(s: &mut String, entries: &[(&str, &str)]) {
    let x = W - RIGHT + 14.0;
    for (i, (label, color)) in entries.iter().enumerate() {
        let y = TOP + 10.0 + 20.0 * i as Real;
        let _ = writeln!(s, "<rect x=\"{}\" y=\"{}\" width=\"14\" height=\"4\" fill=\"{color}\"/>", n2(x), n2(y - 4.0));
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\">{}</text>", n2(x + 20.0), n2(y + 1.0), esc(label));
    }
}

fn polyline(s: &mut String, f: &Frame, pts: &[(Real, Real)], color: &str, class: &str) {
    let d: Vec<String> = pts.iter().map(|&(x, y)| format!("{},{}", n2(f.px(x)), n2(f.py(y)))).collect();
    let _ = writeln!(
        s,
        "<polyline class=\"{class}\" points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>",
        d.join(" ")
    );
}

fn padded_range(values: impl Iterator<Item = Real>) -> (Real, Real) {
    let (mut lo, mut hi) = (Real::INFINITY, Real::NEG_INFINITY);
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = ((hi - lo) * 0.08).max(1e-3);
    (lo - pad, hi + pad)
}

/// Chooses the primary split and representative seed when present.
fn representative(rows: &[TrajectoryRow], exp: &str) -> Option<(u64, u64)> {
    let mut keys: Vec<(u64, u64)> = rows.iter().filter(|r| r.experiment == exp).map(|r| (r.split_seed, r.model_seed)).collect();
    keys.sort_unstable();
    keys.dedup();
    keys.iter().copied().find(|&k| k == (PRIMARY_SPLIT, REPRESENTATIVE_SEED)).or(keys.first().copied())
}

fn series(rows: &[TrajectoryRow], exp: &str, key: (u64, u64), f: impl Fn(&TrajectoryRow) -> Real) -> Vec<(Real, Real)> {
    let mut pts: Vec<(usize, Real)> = rows
        .iter()
        .filter(|r| r.experiment == exp && (r.split_seed, r.model_seed) == key)
        .map(|r| (r.epoch, f(r)))
        .collect();
    pts.sort_by_key(|p| p.0);
    pts.into_iter().map(|(e, v)| (e as Real, v)).collect()
}

pub fn trajectory_overlay_svg(rows: &[TrajectoryRow]) -> Result<String> {
    let on = "norm=on";
    let off = "norm=off";
    let key = representative(rows, on).ok_or_else(|| Error::MissingExperiment(format!("{on} trajectory")))?;
    let a = series(rows, on, key, |r| r.accuracy);
    let b = series(rows, off, key, |r| r.accuracy);
    if b.is_empty() {
        return Err(Error::MissingExperiment(format!("{off} trajectory for seed {}", key.1)));
    }
    let (x0, x1, xt) = epoch_axis(a.len().max(b.len()));
    let (lo, hi) = padded_range(a.iter().chain(&b).map(|p| p.1));
    let (y0, y1, yt) = nice_axis(lo.max(0.0), hi.min(100.0), 5);
    let f = Frame { x0, x1, y0, y1 };
    let mut s = open(&format!("Test accuracy per epoch (split {}, seed {})", key.0, key.1));
    axes(&mut s, &f, "epoch", "test accuracy (%)", &xt, &yt);
    polyline(&mut s, &f, &a, PALETTE[0], "series");
    polyline(&mut s, &f, &b, PALETTE[1], "series");
    legend(&mut s, &[("norm on", PALETTE[0]), ("norm off", PALETTE[1])]);
    Ok(close(s))
}

/// Conditions shown in the seed-level bar chart, in order.
pub const BAR_CONDITIONS: [&str; 5] = ["norm=on", "norm=gentle", "norm=off", "reward=signed", "reward=pos-only"];

pub fn seed_bars_svg(rows: &[CsvRow]) -> Result<String> {
    let mut groups = Vec::new();
    for c in BAR_CONDITIONS {
        let mut sel: Vec<&CsvRow> = rows.iter().filter(|r| r.experiment == c).collect();
        if sel.is_empty() {
            return Err(Error::MissingExperiment(c.to_string()));
        }
        sel.sort_by_key(|r| (r.split_seed, r.model_seed));
        groups.push((c, sel.iter().map(|r| r.accuracy).collect::<Vec<Real>>()));
    }
    let (lo, hi) = padded_range(groups.iter().flat_map(|g| g.1.iter().copied()));
    let (y0, y1, yt) = nice_axis(lo.max(0.0), hi.min(100.0), 5);
    let f = Frame { x0: 0.0, x1: groups.len() as Real, y0, y1 };
    let mut s = open("Seed-level test accuracy by condition");
    axes(&mut s, &f, "", "test accuracy (%)", &[], &yt);
    let slot = (W - LEFT - RIGHT) / groups.len() as Real;
    for (i, (label, vals)) in groups.iter().enumerate() {
        let m = mean(vals);
        let sd = sample_std(vals);
        let cx = f.px(i as Real + 0.5);
        let color = PALETTE[i % PALETTE.len()];
        let top = f.py(m);
        let _ = writeln!(
            s,
            "<rect class=\"bar\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{color}\" fill-opacity=\"0.35\"/>",
            n2(cx - slot * 0.3),
            n2(top),
            n2(slot * 0.6),
            n2(f.py(f.y0) - top)
        );
        let _ = writeln!(
            s,
            "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"#000000\"/>",
            n2(cx),
            n2(f.py((m - sd).max(f.y0))),
            n2(f.py((m + sd).min(f.y1)))
        );
        let k = vals.len();
        for (j, &v) in vals.iter().enumerate() {
            let dx = if k > 1 { (j as Real / (k - 1) as Real - 0.5) * slot * 0.4 } else { 0.0 };
            let _ = writeln!(
                s,
                "<circle class=\"seed-point\" cx=\"{}\" cy=\"{}\" r=\"3\" fill=\"{color}\" stroke=\"#000000\" stroke-width=\"0.5\"/>",
                n2(cx + dx),
                n2(f.py(v))
            );
        }
        let short = label.replace("norm=", "norm ").replace("reward=", "");
        let _ = writeln!(
            s,
            "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"11\">{}</text>",
            n2(cx),
            n2(H - BOTTOM + 17.0),
            esc(&short)
        );
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"10\">n={k}</text>", n2(cx), n2(H - BOTTOM + 31.0));
    }
    legend(&mut s, &[("mean ± std", "#000000")]);
    Ok(close(s))
}

/// Conditions of the normalization-schedule figure.
pub const SCHEDULES: [&str; 3] = ["norm=on", "norm=gentle", "norm=off"];

pub fn norm_schedule_svg(rows: &[TrajectoryRow]) -> Result<String> {
    let mut curves = Vec::new();
    for exp in SCHEDULES {
        let sel: Vec<&TrajectoryRow> = rows.iter().filter(|r| r.experiment == exp).collect();
        if sel.is_empty() {
            return Err(Error::MissingExperiment(format!("{exp} trajectory")));
        }
        let split = if sel.iter().any(|r| r.split_seed == PRIMARY_SPLIT) {
            PRIMARY_SPLIT
        } else {
            sel.iter().map(|r| r.split_seed).min().expect("nonempty")
        };
        let epochs = sel.iter().map(|r| r.epoch).max().unwrap_or(0);
        let mut pts = Vec::with_capacity(epochs);
        for e in 1..=epochs {
            let vals: Vec<Real> =
                sel.iter().filter(|r| r.epoch == e && r.split_seed == split).map(|r| r.mean_row_norm).collect();
            if !vals.is_empty() {
                pts.push((e as Real, mean(&vals), sample_std(&vals)));
            }
        }
        curves.push((exp, pts));
    }
    let (lo, hi) = padded_range(curves.iter().flat_map(|c| c.1.iter().flat_map(|p| [p.1 - p.2, p.1 + p.2])));
    let (x0, x1, xt) = epoch_axis(curves.iter().map(|c| c.1.len()).max().unwrap_or(1));
    let (y0, y1, yt) = nice_axis(lo.max(0.0), hi, 5);
    let f = Frame { x0, x1, y0, y1 };
    let mut s = open("Mean class-row norm per epoch");
    axes(&mut s, &f, "epoch", "mean class-row L2 norm", &xt, &yt);
    let mut legend_entries = Vec::new();
    for (i, (exp, pts)) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let upper: Vec<String> = pts.iter().map(|p| format!("{},{}", n2(f.px(p.0)), n2(f.py(p.1 + p.2)))).collect();
        let lower: Vec<String> = pts.iter().rev().map(|p| format!("{},{}", n2(f.px(p.0)), n2(f.py(p.1 - p.2)))).collect();
        let _ = writeln!(
            s,
            "<polygon class=\"band\" points=\"{} {}\" fill=\"{color}\" fill-opacity=\"0.2\" stroke=\"none\"/>",
            upper.join(" "),
            lower.join(" ")
        );
        let line: Vec<(Real, Real)> = pts.iter().map(|p| (p.0, p.1)).collect();
        polyline(&mut s, &f, &line, color, "series");
        legend_entries.push((exp.trim_start_matches("norm="), color));
    }
    legend(&mut s, &legend_entries);
    Ok(close(s))
}

pub fn confusion_svg(split: u64, seed: u64, m: &[Vec<Real>]) -> Result<String> {
    let k = m.len();
    if k == 0 {
        return Err(Error::MissingExperiment("confusion matrix".into()));
    }
    let size = (H - TOP - BOTTOM).min(W - LEFT - RIGHT);
    let cell = size / k as Real;
    let x0 = LEFT + ((W - LEFT - RIGHT) - size) / 2.0;
    let y0 = TOP;
    let mut s = open(&format!("Row-normalized test confusion (split {split}, seed {seed})"));
    for (t, row) in m.iter().enumerate() {
        for (p, &v) in row.iter().enumerate() {
            let shade = (255.0 - v.clamp(0.0, 1.0) * 215.0).round() as u8;
            let _ = writeln!(
                s,
                "<rect class=\"cell\" x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#{shade:02x}{shade:02x}ff\" stroke=\"#ffffff\"/>",
                n2(x0 + p as Real * cell),
                n2(y0 + t as Real * cell),
                n2(cell),
                n2(cell)
            );
            if v >= 0.005 {
                let fill = if v > 0.6 { "#ffffff" } else { "#000000" };
                let _ = writeln!(
                    s,
                    "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"9\" fill=\"{fill}\">{}</text>",
                    n2(x0 + (p as Real + 0.5) * cell),
                    n2(y0 + (t as Real + 0.5) * cell + 3.0),
                    n2(v)
                );
            }
        }
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{t}</text>", n2(x0 - 6.0), n2(y0 + (t as Real + 0.5) * cell + 4.0));
        let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{t}</text>", n2(x0 + (t as Real + 0.5) * cell), n2(y0 + size + 15.0));
    }
    let _ = writeln!(s, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">predicted class</text>", n2(x0 + size / 2.0), n2(H - 12.0));
    let cy = n2(y0 + size / 2.0);
    let _ = writeln!(s, "<text x=\"{0}\" y=\"{cy}\" text-anchor=\"middle\" transform=\"rotate(-90 {0} {cy})\">true class</text>", n2(x0 - 30.0));
    Ok(close(s))
}

/// Renders one figure from the CSVs in `dir` and writes it there.
pub fn plot_svg(kind: PlotKind, dir: &Path) -> Result<PathBuf> {
    let src = dir.join(kind.sources()[0]);
    if !src.exists() {
        return Err(Error::MissingExperiment(format!("{} needs {}", kind.file_name(), src.display())));
    }
    let svg = match kind {
        PlotKind::TrajectoryOverlay => trajectory_overlay_svg(&read_trajectory_csv(&src)?)?,
        PlotKind::SeedBars => seed_bars_svg(&read_raw_csv(&src)?)?,
        PlotKind::NormSchedule => norm_schedule_svg(&read_trajectory_csv(&src)?)?,
        PlotKind::Confusion => {
            let (split, seed, m) = read_confusion_csv(&src)?;
            confusion_svg(split, seed, &m)?
        }
    };
    let out = dir.join(kind.file_name());
    std::fs::write(&out, svg)?;
    Ok(out)
}
