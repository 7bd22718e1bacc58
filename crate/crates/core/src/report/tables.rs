//! Markdown and LaTeX-style tables derived from the raw CSVs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::csv::{read_diagnostics_csv, read_raw_csv, CsvRow};
use crate::error::{Error, Result};
use crate::protocol::{ablation_specs, SuiteConfig};
use crate::stats::{paired, summarize};
use crate::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub title: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub footnotes: Vec<String>,
}

impl Table {
    fn new(title: &str, header: &[&str]) -> Self {
        Self {
            title: title.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            footnotes: Vec::new(),
        }
    }

    fn row(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }

    pub fn to_markdown(&self) -> String {
        let mut out = format!("### {}\n\n", self.title);
        let _ = writeln!(out, "| {} |", self.header.join(" | "));
        let _ = writeln!(out, "|{}", "---|".repeat(self.header.len()));
        for r in &self.rows {
            let _ = writeln!(out, "| {} |", r.join(" | "));
        }
        if !self.footnotes.is_empty() {
            out.push('\n');
            for f in &self.footnotes {
                let _ = writeln!(out, "{f}  ");
            }
        }
        out.push('\n');
        out
    }

    pub fn to_latex(&self) -> String {
        let mut out = format!("% {}\n\\begin{{tabular}}{{l{}}}\n\\hline\n", self.title, "r".repeat(self.header.len() - 1));
        let line = |cells: &[String]| cells.iter().map(|c| tex_escape(c)).collect::<Vec<_>>().join(" & ") + " \\\\\n";
        out.push_str(&line(&self.header));
        out.push_str("\\hline\n");
        for r in &self.rows {
            out.push_str(&line(r));
        }
        out.push_str("\\hline\n\\end{tabular}\n");
        for f in &self.footnotes {
            let _ = writeln!(out, "% {}", tex_escape(f));
        }
        out.push('\n');
        out
    }
}

fn tex_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '±' => out.push_str("$\\pm$"),
            'Δ' => out.push_str("$\\Delta$"),
            '−' => out.push('-'),
            'δ' => out.push_str("$\\delta$"),
            '†' => out.push_str("$^\\dagger$"),
            '≥' => out.push_str("$\\geq$"),
            '>' => out.push_str("$>$"),
            '%' => out.push_str("\\%"),
            '_' => out.push_str("\\_"),
            '&' => out.push_str("\\&"),
            '#' => out.push_str("\\#"),
            c => out.push(c),
        }
    }
    out
}

fn f2(v: Real) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn pm(mean: Real, std: Real) -> String {
    format!("{} ± {}", f2(mean), f2(std))
}

fn select<'a>(rows: &'a [CsvRow], exp: &str, file: &Path) -> Result<Vec<&'a CsvRow>> {
    let mut sel: Vec<&CsvRow> = rows.iter().filter(|r| r.experiment == exp).collect();
    if sel.is_empty() {
        return Err(Error::MissingExperiment(format!("{exp} in {}", file.display())));
    }
    sel.sort_by_key(|r| (r.split_seed, r.model_seed));
    Ok(sel)
}

fn acc(rows: &[&CsvRow]) -> Vec<Real> {
    rows.iter().map(|r| r.accuracy).collect()
}

/// Seed-matched accuracies `(treatment, control)`.
fn matched(t: &[&CsvRow], c: &[&CsvRow]) -> Result<(Vec<Real>, Vec<Real>)> {
    let key = |rs: &[&CsvRow]| rs.iter().map(|r| (r.split_seed, r.model_seed)).collect::<Vec<_>>();
    if key(t) != key(c) {
        return Err(Error::InvalidArgument(format!(
            "unpaired seed sets for {} vs {}",
            t.first().map_or("", |r| &r.experiment),
            c.first().map_or("", |r| &r.experiment)
        )));
    }
    Ok((acc(t), acc(c)))
}

fn fmt_p(p: f64) -> String {
    format!("{p:.4}")
}

/// Summary row cells: mean ± std, CI half-width, n.
fn summary_cells(values: &[Real]) -> Result<[String; 3]> {
    let s = summarize(values)?;
    Ok([pm(s.mean, s.std), f2(s.ci_half), s.n.to_string()])
}

fn paired_row(name: &str, t: &[Real], c: &[Real]) -> Result<Vec<String>> {
    let p = paired(t, c)?;
    Ok(vec![
        name.to_string(),
        p.n_pairs.to_string(),
        p.n_nonties.to_string(),
        f2(p.mean_diff),
        f2(p.ci_half),
        fmt_p(p.sign_p),
        p.dz.map_or("n/a".into(), f2),
        f2(p.cliffs_delta),
    ])
}

const PAIRED_HEADER: &[&str] =
    &["Comparison", "Pairs", "Non-ties", "Mean Δ (pp)", "95% CI ±", "Sign p", "d_z", "Cliff's δ"];

fn baselines_tables(path: &Path) -> Result<Vec<Table>> {
    let rows = read_raw_csv(path)?;
    let mut t = Table::new("Baselines", &["Model", "Accuracy (%)", "95% CI ±", "Macro F1", "n"]);
    let names = [
        ("logreg-pixels", "Softmax (pixels)"),
        ("logreg-rates", "Softmax (encoded rates)"),
        ("hybrid-default", "Hybrid readout"),
        ("stdp-proxy", "STDP-style proxy"),
    ];
    for (exp, name) in names {
        let sel = select(&rows, exp, path)?;
        let [a, ci, n] = summary_cells(&acc(&sel))?;
        let f1 = summarize(&sel.iter().map(|r| r.macro_f1).collect::<Vec<_>>())?;
        t.row(vec![name.into(), a, ci, format!("{:.3} ± {:.3}", f1.mean, f1.std), n]);
    }
    t.footnotes.push("Mean ± sample std over seeds; CI half-width = 1.96·std/√n.".into());
    let mut p = Table::new("Baselines: paired hybrid vs proxy", PAIRED_HEADER);
    let (h, x) = matched(&select(&rows, "hybrid-default", path)?, &select(&rows, "stdp-proxy", path)?)?;
    p.row(paired_row("hybrid − proxy", &h, &x)?);
    Ok(vec![t, p])
}

fn ablation_tables(path: &Path) -> Result<Vec<Table>> {
    let rows = read_raw_csv(path)?;
    let specs = ablation_specs(&SuiteConfig::default());
    let mut built = Vec::new();
    for s in &specs {
        let sel = select(&rows, &s.spec.label, path)?;
        built.push((s.factor, s.setting.clone(), acc(&sel)));
    }
    let min_n = built.iter().map(|b| b.2.len()).min().unwrap_or(0);
    let max_n = built.iter().map(|b| b.2.len()).max().unwrap_or(0);
    let mut t = Table::new("Ablations (hybrid readout)", &["Factor", "Setting", "Accuracy (%)", "95% CI ±", "n"]);
    for (factor, setting, vals) in &built {
        let [a, ci, n] = summary_cells(vals)?;
        let mark = if vals.len() > min_n { "†" } else { "" };
        t.row(vec![factor.to_string(), format!("{setting}{mark}"), a, ci, n]);
    }
    if max_n > min_n {
        t.footnotes.push(format!("† rows use n = {max_n} seeds; other rows use n = {min_n}."));
    }
    t.footnotes.push("Each row changes one factor from the default configuration.".into());

    let mut p = Table::new("Ablations: paired comparisons", PAIRED_HEADER);
    for (treat, ctrl, name) in [
        ("norm=off", "norm=on", "norm off − norm on"),
        ("norm=gentle", "norm=on", "norm gentle − norm on"),
        ("reward=pos-only", "reward=signed", "pos-only − signed"),
    ] {
        let (a, b) = matched(&select(&rows, treat, path)?, &select(&rows, ctrl, path)?)?;
        p.row(paired_row(name, &a, &b)?);
    }
    Ok(vec![t, p])
}

fn interaction_tables(path: &Path) -> Result<Vec<Table>> {
    let rows = read_raw_csv(path)?;
    let get = |l: &str| select(&rows, l, path);
    let mut t = Table::new("Normalization × reward shaping", &["Cell", "Accuracy (%)", "95% CI ±", "n"]);
    for mode in ["on", "off"] {
        for shaping in ["signed", "pos-only"] {
            let [a, ci, n] = summary_cells(&acc(&get(&format!("norm-{mode}/{shaping}"))?))?;
            t.row(vec![format!("norm {mode}, {shaping}"), a, ci, n]);
        }
    }
    let mut deltas = Vec::new();
    for mode in ["on", "off"] {
        let (pos, signed) = matched(&get(&format!("norm-{mode}/pos-only"))?, &get(&format!("norm-{mode}/signed"))?)?;
        let diffs: Vec<Real> = pos.iter().zip(&signed).map(|(a, b)| a - b).collect();
        let [a, ci, n] = summary_cells(&diffs)?;
        t.row(vec![format!("Δ pos-only − signed (norm {mode})"), a, ci, n]);
        deltas.push((mode, pos, signed, diffs));
    }
    let contrast: Vec<Real> = deltas[0].3.iter().zip(&deltas[1].3).map(|(a, b)| a - b).collect();
    let [a, ci, n] = summary_cells(&contrast)?;
    t.row(vec!["Interaction contrast Δ(on) − Δ(off)".into(), a, ci, n]);
    t.footnotes.push("Cells share seeds; Δ rows are per-seed paired differences.".into());

    let mut p = Table::new("Normalization × reward shaping: paired comparisons", PAIRED_HEADER);
    for (mode, pos, signed, _) in &deltas {
        p.row(paired_row(&format!("pos-only − signed (norm {mode})"), pos, signed)?);
    }
    Ok(vec![t, p])
}

fn split_tables(path: &Path) -> Result<Vec<Table>> {
    let rows = read_raw_csv(path)?;
    let default = select(&rows, "default", path)?;
    let off = select(&rows, "norm-off", path)?;
    let mut splits: Vec<u64> = default.iter().map(|r| r.split_seed).collect();
    splits.dedup();
    let mut t = Table::new(
        "Split robustness",
        &["Split seed", "Default (%)", "Norm off (%)", "Δ (pp)", "95% CI ±", "Sign p", "n"],
    );
    let mut split_deltas = Vec::new();
    for s in &splits {
        let d: Vec<&CsvRow> = default.iter().copied().filter(|r| r.split_seed == *s).collect();
        let o: Vec<&CsvRow> = off.iter().copied().filter(|r| r.split_seed == *s).collect();
        let (ov, dv) = matched(&o, &d)?;
        let ds = summarize(&dv)?;
        let os = summarize(&ov)?;
        let p = paired(&ov, &dv)?;
        let diffs: Vec<Real> = ov.iter().zip(&dv).map(|(a, b)| a - b).collect();
        let dsum = summarize(&diffs)?;
        t.row(vec![
            s.to_string(),
            pm(ds.mean, ds.std),
            pm(os.mean, os.std),
            pm(dsum.mean, dsum.std),
            f2(dsum.ci_half),
            fmt_p(p.sign_p),
            ds.n.to_string(),
        ]);
        split_deltas.push(os.mean - ds.mean);
    }
    let across = summarize(&split_deltas)?;
    let positive = split_deltas.iter().filter(|&&d| d > 0.0).count();
    t.row(vec![
        format!("across splits (Δ>0 in {positive}/{})", split_deltas.len()),
        String::new(),
        String::new(),
        pm(across.mean, across.std),
        f2(across.ci_half),
        String::new(),
        across.n.to_string(),
    ]);
    t.footnotes.push("Identical hyperparameters on every split; across-split n counts splits.".into());
    Ok(vec![t])
}

fn temporal_tables(path: &Path) -> Result<Vec<Table>> {
    let rows = read_raw_csv(path)?;
    let count = acc(&select(&rows, "count", path)?);
    let bins = acc(&select(&rows, "time-bin", path)?);
    let mut t = Table::new("Temporal-order task", &["Readout", "Accuracy (%)", "95% CI ±", "n"]);
    for (name, v) in [("Count (timing-agnostic)", &count), ("Time-bin (timing-aware)", &bins)] {
        let [a, ci, n] = summary_cells(v)?;
        t.row(vec![name.into(), a, ci, n]);
    }
    let (b, c) = matched(&select(&rows, "time-bin", path)?, &select(&rows, "count", path)?)?;
    let gap: Vec<Real> = b.iter().zip(&c).map(|(x, y)| x - y).collect();
    let [a, ci, n] = summary_cells(&gap)?;
    t.row(vec!["Gap (time-bin − count)".into(), a, ci, n]);
    Ok(vec![t])
}

fn diagnostics_tables(path: &Path) -> Result<Vec<Table>> {
    let rows = read_diagnostics_csv(path)?;
    if rows.is_empty() {
        return Err(Error::MissingExperiment(format!("no metrics in {}", path.display())));
    }
    let mut t = Table::new("Diagnostics", &["Metric", "Mean ± std", "n"]);
    for r in rows {
        let cell = if r.mean.abs() < 10.0 { format!("{:.4} ± {:.4}", r.mean, r.std) } else { pm(r.mean, r.std) };
        t.row(vec![r.metric.replace('_', " "), cell, r.n.to_string()]);
    }
    Ok(vec![t])
}

type Builder = fn(&Path) -> Result<Vec<Table>>;

const SOURCES: &[(&str, Builder)] = &[
    ("baselines.csv", baselines_tables),
    ("ablations.csv", ablation_tables),
    ("interaction.csv", interaction_tables),
    ("splits.csv", split_tables),
    ("temporal.csv", temporal_tables),
    ("diagnostics.csv", diagnostics_tables),
];

/// Builds every table whose source CSV exists in `dir`.
pub fn build_tables(dir: &Path) -> Result<Vec<Table>> {
    let mut tables = Vec::new();
    for (file, builder) in SOURCES {
        let path = dir.join(file);
        if path.exists() {
            tables.extend(builder(&path)?);
        }
    }
    if tables.is_empty() {
        return Err(Error::MissingExperiment(format!("no result CSVs in {}", dir.display())));
    }
    Ok(tables)
}

/// Writes `tables.md` and `tables.tex`. Nothing is written on error.
pub fn render_tables(dir: &Path) -> Result<Vec<PathBuf>> {
    let tables = build_tables(dir)?;
    let md: String = tables.iter().map(Table::to_markdown).collect();
    let tex: String = tables.iter().map(Table::to_latex).collect();
    let md_path = dir.join("tables.md");
    let tex_path = dir.join("tables.tex");
    std::fs::write(&md_path, md)?;
    std::fs::write(&tex_path, tex)?;
    Ok(vec![md_path, tex_path])
}
