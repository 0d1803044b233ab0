//! Run manifest and the CSV writer shared by every experiment.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::RunError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    /// Worst measured value over everything the check covers.
    pub measured: f64,
    pub threshold: f64,
    pub detail: String,
}

impl CheckResult {
    /// `measured ≤ threshold`.
    pub fn at_most(name: &str, measured: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass: measured <= threshold,
            measured,
            threshold,
            detail: detail.into(),
        }
    }

    /// `measured ≥ threshold`.
    pub fn at_least(name: &str, measured: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass: measured >= threshold,
            measured,
            threshold,
            detail: detail.into(),
        }
    }
}

/// One emitted table with the provenance of its numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: String,
    pub columns: Vec<String>,
    pub estimator: String,
    pub streams: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub schema_version: u32,
    pub experiment: String,
    /// SHA-256 of the effective configuration without its output directory.
    pub config_hash: String,
    pub master_seed: u64,
    pub seed_count: usize,
    pub threads: usize,
    pub wall_time_s: f64,
    pub checks: Vec<CheckResult>,
    pub metrics: BTreeMap<String, f64>,
    pub files: Vec<OutputFile>,
    pub pass: bool,
}

pub fn config_hash(cfg: &RunConfig) -> String {
    let mut c = cfg.clone();
    c.output = PathBuf::new();
    let bytes = serde_json::to_vec(&c).expect("config serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Collects output tables for one run directory.
pub struct Emitter {
    dir: PathBuf,
    files: Vec<OutputFile>,
}

impl Emitter {
    pub fn new(dir: &Path) -> Result<Self, RunError> {
        std::fs::create_dir_all(dir).map_err(|e| RunError::Output {
            path: dir.to_path_buf(),
            message: e.to_string(),
        })?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    /// Writes `name` with a header row and one row per record.
    pub fn table<R: Serialize>(
        &mut self,
        name: &str,
        columns: &[&str],
        rows: &[R],
        estimator: impl Into<String>,
        streams: impl Into<String>,
    ) -> Result<(), RunError> {
        let path = self.dir.join(name);
        let fail = |e: &dyn std::fmt::Display| RunError::Output {
            path: path.clone(),
            message: e.to_string(),
        };
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        w.write_record(columns).map_err(|e| fail(&e))?;
        for r in rows {
            w.serialize(r).map_err(|e| fail(&e))?;
        }
        let bytes = w.into_inner().map_err(|e| fail(&e))?;
        std::fs::write(&path, bytes).map_err(|e| fail(&e))?;
        self.files.push(OutputFile {
            path: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            estimator: estimator.into(),
            streams: streams.into(),
        });
        Ok(())
    }

    /// Writes `<stem>.csv` and its `<stem>.json` sidecar.
    pub fn curve(
        &mut self,
        stem: &str,
        curve: &ergoprop::asymptotics::DecayCurve,
        streams: impl Into<String>,
    ) -> Result<(), RunError> {
        curve.write(&self.dir, stem).map_err(|e| RunError::Output {
            path: self.dir.join(stem),
            message: e.to_string(),
        })?;
        self.files.push(OutputFile {
            path: format!("{stem}.csv"),
            columns: ["sep", "value", "ci_low", "ci_high"].map(String::from).to_vec(),
            estimator: curve.meta.estimator.clone(),
            streams: streams.into(),
        });
        Ok(())
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn into_files(self) -> Vec<OutputFile> {
        self.files
    }
}
