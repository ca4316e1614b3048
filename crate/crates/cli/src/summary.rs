//! Run summaries and the output manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionResult {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub threshold: f64,
    /// `"<="`, `"<"`, `">="` or `"in"` (with `threshold_high`).
    pub comparison: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold_high: Option<f64>,
}

impl CriterionResult {
    pub fn at_most(name: &str, measured: f64, threshold: f64) -> Self {
        Self::new(name, measured <= threshold, measured, threshold, "<=", None)
    }

    pub fn at_least(name: &str, measured: f64, threshold: f64) -> Self {
        Self::new(name, measured >= threshold, measured, threshold, ">=", None)
    }

    pub fn below(name: &str, measured: f64, threshold: f64) -> Self {
        Self::new(name, measured < threshold, measured, threshold, "<", None)
    }

    pub fn within(name: &str, measured: f64, lo: f64, hi: f64) -> Self {
        Self::new(name, (lo..=hi).contains(&measured), measured, lo, "in", Some(hi))
    }

    fn new(name: &str, passed: bool, measured: f64, threshold: f64, cmp: &str, high: Option<f64>) -> Self {
        Self {
            name: name.into(),
            passed,
            measured,
            threshold,
            comparison: cmp.into(),
            threshold_high: high,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitRecord {
    pub series: String,
    pub model: String,
    pub parameters: BTreeMap<String, f64>,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub status: String,
    pub scenario: String,
    pub seed: u64,
    pub config: RunConfig,
    pub versions: BTreeMap<String, String>,
    pub wall_clock_seconds: f64,
    pub metrics: BTreeMap<String, f64>,
    pub criteria: Vec<CriterionResult>,
    pub fits: Vec<FitRecord>,
    pub files: Vec<ManifestEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl RunSummary {
    pub fn succeeded(&self) -> bool {
        self.status == "success"
    }

    pub fn all_passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).copied()
    }

    pub fn criterion(&self, name: &str) -> Option<&CriterionResult> {
        self.criteria.iter().find(|c| c.name == name)
    }
}

pub fn versions() -> BTreeMap<String, String> {
    BTreeMap::from([
        ("fermiflow".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("snapshot_format".to_string(), "FMF1".to_string()),
    ])
}

/// Output directory that records every file it writes.
#[derive(Debug)]
pub struct Outputs {
    root: PathBuf,
    files: Vec<ManifestEntry>,
}

impl Outputs {
    pub fn create(root: &Path) -> std::io::Result<Self> {
        fs::create_dir_all(root)?;
        // A stale summary from an earlier run must not outlive this one.
        match fs::remove_file(root.join(SUMMARY_FILE)) {
            Err(e) if e.kind() != std::io::ErrorKind::NotFound => return Err(e),
            _ => {}
        }
        Ok(Self { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, relative: &str, bytes: &[u8]) -> std::io::Result<()> {
        let path = self.root.join(relative);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        self.files.push(ManifestEntry {
            path: relative.to_string(),
            bytes: bytes.len() as u64,
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }

    pub fn manifest(&self) -> Vec<ManifestEntry> {
        self.files.clone()
    }
}

pub const SUMMARY_FILE: &str = "summary.json";

/// Writes `summary.json` through a temporary file and a rename.
pub fn write_summary_atomically(root: &Path, summary: &RunSummary) -> std::io::Result<()> {
    let tmp = root.join(".summary.json.tmp");
    let text = serde_json::to_string_pretty(summary).map_err(std::io::Error::other)?;
    let mut file = fs::File::create(&tmp)?;
    file.write_all(text.as_bytes())?;
    file.sync_all()?;
    fs::rename(&tmp, root.join(SUMMARY_FILE))
}
