//! Experiment runner for `ergoprop`.
//!
//! A run is a pure function of its [`RunConfig`]: the CSV tables it writes
//! are byte-identical across repetitions and thread counts. Only
//! `manifest.json` carries run-specific data (wall time, thread count).

pub mod config;
pub mod error;
mod experiments;
pub mod manifest;

use std::path::Path;
use std::time::Instant;

use serde::Serialize;

pub use config::{Experiment, RunConfig};
pub use error::{ConfigError, RunError};
pub use manifest::{CheckResult, RunManifest};

use manifest::{config_hash, Emitter};

/// Environment variable that replaces the master seed.
pub const SEED_ENV: &str = "ERGOPROP_SEED";

/// Applies the `--experiment` flag and the seed variable, then revalidates.
pub fn apply_overrides(
    mut cfg: RunConfig,
    experiment: Option<&str>,
    seed: Option<&str>,
) -> Result<RunConfig, ConfigError> {
    if let Some(name) = experiment {
        cfg.experiment = Experiment::parse(name).ok_or_else(|| ConfigError::Invalid {
            path: "--experiment".into(),
            message: format!("unknown experiment '{name}'"),
        })?;
    }
    if let Some(s) = seed {
        cfg.seeds.master = s.trim().parse().map_err(|_| ConfigError::Invalid {
            path: SEED_ENV.into(),
            message: format!("'{s}' is not an unsigned 64-bit integer"),
        })?;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[derive(Serialize)]
struct SeedRow {
    index: usize,
    seed: u64,
}

/// Runs the configured experiment, writing every output into `out_dir`.
pub fn run(cfg: &RunConfig, out_dir: &Path) -> Result<RunManifest, RunError> {
    cfg.validate()?;
    let start = Instant::now();
    let mut em = Emitter::new(out_dir)?;
    let seeds: Vec<SeedRow> = cfg
        .seeds
        .list()
        .into_iter()
        .enumerate()
        .map(|(index, seed)| SeedRow { index, seed })
        .collect();
    em.table("seeds.csv", &["index", "seed"], &seeds, "master + index", "none")?;
    let outcome = experiments::dispatch(cfg, &mut em)?;

    let resolved = serde_json::to_string_pretty(cfg).expect("config serializes");
    write(&out_dir.join("config.json"), resolved.as_bytes())?;
    let pass = outcome.checks.iter().all(|c| c.pass);
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").into(),
        schema_version: config::SCHEMA_VERSION,
        experiment: cfg.experiment.name().into(),
        config_hash: config_hash(cfg),
        master_seed: cfg.seeds.master,
        seed_count: cfg.seeds.count,
        threads: rayon::current_num_threads(),
        wall_time_s: start.elapsed().as_secs_f64(),
        checks: outcome.checks,
        metrics: outcome.metrics,
        files: em.into_files(),
        pass,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write(&out_dir.join("manifest.json"), json.as_bytes())?;
    Ok(manifest)
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), RunError> {
    std::fs::write(path, bytes).map_err(|e| RunError::Output {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
