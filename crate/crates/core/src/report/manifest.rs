//! Run manifest: one `path  size  digest` line per emitted file.
//!
//! Header lines start with `#`. The timestamp header is informational and
//! never enters any digest; the manifest does not list itself.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::data::file_digest;
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.txt";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: String,
    pub size: u64,
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub tool_version: String,
    pub config_digest: String,
    pub hardware: String,
    pub timestamp: String,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn render(&self) -> String {
        let mut out = String::from("# spikebench run manifest\n");
        let _ = writeln!(out, "# tool_version: {}", self.tool_version);
        let _ = writeln!(out, "# config_digest: {}", self.config_digest);
        let _ = writeln!(out, "# hardware: {}", self.hardware);
        let _ = writeln!(out, "# timestamp: {}", self.timestamp);
        for e in &self.entries {
            let _ = writeln!(out, "{}  {}  {}", e.path, e.size, e.digest);
        }
        out
    }

    /// Rendered text without the timestamp line, for run-to-run comparison.
    pub fn render_without_timestamp(&self) -> String {
        Manifest { timestamp: String::new(), ..self.clone() }.render()
    }

    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let mut m = Manifest {
            tool_version: String::new(),
            config_digest: String::new(),
            hardware: String::new(),
            timestamp: String::new(),
            entries: Vec::new(),
        };
        for (i, line) in text.lines().enumerate() {
            if let Some(h) = line.strip_prefix("# ") {
                if let Some((k, v)) = h.split_once(": ") {
                    match k {
                        "tool_version" => m.tool_version = v.into(),
                        "config_digest" => m.config_digest = v.into(),
                        "hardware" => m.hardware = v.into(),
                        "timestamp" => m.timestamp = v.into(),
                        _ => {}
                    }
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split("  ").collect();
            let bad = || Error::Parse { path: path.to_path_buf(), line: i + 1, msg: "expected `path  size  digest`".into() };
            if parts.len() != 3 {
                return Err(bad());
            }
            m.entries.push(ManifestEntry {
                path: parts[0].into(),
                size: parts[1].parse().map_err(|_| bad())?,
                digest: parts[2].into(),
            });
        }
        Ok(m)
    }
}

/// Relative paths of every regular file under `dir` except the manifest, sorted.
pub fn list_outputs(dir: &Path) -> Result<Vec<String>> {
    fn walk(root: &Path, cur: &Path, out: &mut Vec<String>) -> Result<()> {
        for entry in std::fs::read_dir(cur)? {
            let p = entry?.path();
            if p.is_dir() {
                walk(root, &p, out)?;
            } else {
                let rel = p.strip_prefix(root).expect("under root");
                let rel = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
                if rel != MANIFEST_FILE {
                    out.push(rel);
                }
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out)?;
    out.sort();
    Ok(out)
}

fn entry_for(dir: &Path, rel: &str) -> Result<ManifestEntry> {
    let p = dir.join(rel);
    Ok(ManifestEntry { path: rel.into(), size: std::fs::metadata(&p)?.len(), digest: file_digest(&p)? })
}

/// Lists every file currently in `dir` and writes the manifest there.
pub fn write_manifest(dir: &Path, config_digest: &str, hardware: &str) -> Result<(PathBuf, Manifest)> {
    let entries = list_outputs(dir)?.iter().map(|rel| entry_for(dir, rel)).collect::<Result<Vec<_>>>()?;
    let timestamp = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs().to_string())
        .unwrap_or_default();
    let m = Manifest {
        tool_version: env!("CARGO_PKG_VERSION").into(),
        config_digest: config_digest.into(),
        hardware: hardware.into(),
        timestamp,
        entries,
    };
    let path = dir.join(MANIFEST_FILE);
    std::fs::write(&path, m.render())?;
    Ok((path, m))
}

/// Recomputes every listed digest. Fails naming each changed, missing or unlisted file.
pub fn verify_manifest(path: &Path) -> Result<usize> {
    let text = std::fs::read_to_string(path)?;
    let m = Manifest::parse(path, &text)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut bad = Vec::new();
    for e in &m.entries {
        match entry_for(dir, &e.path) {
            Ok(now) if now == *e => {}
            Ok(_) => bad.push(e.path.clone()),
            Err(_) => bad.push(format!("{} (missing)", e.path)),
        }
    }
    for rel in list_outputs(dir)? {
        if !m.entries.iter().any(|e| e.path == rel) {
            bad.push(format!("{rel} (unlisted)"));
        }
    }
    if bad.is_empty() {
        Ok(m.entries.len())
    } else {
        Err(Error::Verification(bad))
    }
}
