//! The six experiments. Each reads its section of the config, writes its
//! tables through the [`Emitter`] and returns the checks it evaluated.

mod decay;
mod highprob;
mod kappa;
mod mixing;
mod rankone;
mod verify;

use std::collections::BTreeMap;

use ergoprop::asymptotics::{CurveMeta, CurvePoint, DecayCurve};
use ergoprop::stats::bootstrap_indices;
use serde::Serialize;

use crate::config::{Experiment, RunConfig};
use crate::error::RunError;
use crate::manifest::{CheckResult, Emitter};

/// Stream tags of the CLI; the library uses tags below 40.
const TAG_VERIFY: u64 = 40;
const TAG_CURVE: u64 = 41;
const TAG_DECAY: u64 = 42;
const TAG_PMF: u64 = 43;

#[derive(Debug, Default)]
pub struct Outcome {
    pub checks: Vec<CheckResult>,
    /// Headline estimates, e.g. `kappa` or fitted rates.
    pub metrics: BTreeMap<String, f64>,
}

pub fn dispatch(cfg: &RunConfig, em: &mut Emitter) -> Result<Outcome, RunError> {
    match cfg.experiment {
        Experiment::Verify => verify::run(cfg, em),
        Experiment::Kappa => kappa::run(cfg, em),
        Experiment::Decay => decay::run(cfg, em),
        Experiment::Rankone => rankone::run(cfg, em),
        Experiment::Mixing => mixing::run(cfg, em),
        Experiment::Highprob => highprob::run(cfg, em),
    }
}

fn lib_err(experiment: Experiment, context: impl Into<String>) -> impl FnOnce(ergoprop::Error) -> RunError {
    let context = context.into();
    move |source| RunError::Experiment {
        experiment: experiment.name(),
        context,
        source,
    }
}

/// A per-item check record; `value ≤ threshold` unless `pass` says otherwise.
#[derive(Debug, Clone, Serialize)]
struct CheckRow {
    seed: u64,
    check: &'static str,
    value: f64,
    threshold: f64,
    pass: bool,
}

impl CheckRow {
    fn at_most(seed: u64, check: &'static str, value: f64, threshold: f64) -> Self {
        Self {
            seed,
            check,
            value,
            threshold,
            pass: value <= threshold,
        }
    }
}

/// One manifest check per distinct name, in order of first appearance, with
/// the largest value as the measurement.
fn summarize(rows: &[CheckRow]) -> Vec<CheckResult> {
    let mut names: Vec<&'static str> = Vec::new();
    for r in rows {
        if !names.contains(&r.check) {
            names.push(r.check);
        }
    }
    names
        .into_iter()
        .map(|name| {
            let mine: Vec<&CheckRow> = rows.iter().filter(|r| r.check == name).collect();
            let worst = mine.iter().map(|r| r.value).fold(f64::NEG_INFINITY, f64::max);
            let failed = mine.iter().filter(|r| !r.pass).count();
            CheckResult {
                name: name.into(),
                pass: failed == 0,
                measured: worst,
                threshold: mine[0].threshold,
                detail: format!("{failed} of {} failed", mine.len()),
            }
        })
        .collect()
}

/// Geometric mean over seeds at each separation, with a bootstrap interval.
/// `values[k][j]` belongs to seed `k` and separation `seps[j]`.
fn geometric_mean_curve(
    seps: &[f64],
    values: &[Vec<f64>],
    meta: CurveMeta,
) -> ergoprop::Result<DecayCurve> {
    let points = seps
        .iter()
        .enumerate()
        .map(|(j, &sep)| {
            let logs: Vec<f64> = values.iter().map(|v| v[j].ln()).collect();
            let b = bootstrap_indices(logs.len(), TAG_CURVE ^ ((j as u64) << 8), |idx| {
                (idx.iter().map(|&i| logs[i]).sum::<f64>() / idx.len() as f64).exp()
            });
            CurvePoint {
                sep,
                value: b.estimate,
                ci_low: b.ci_low,
                ci_high: b.ci_high,
            }
        })
        .collect();
    DecayCurve::new(points, meta)
}

/// Arithmetic mean over seeds at each separation, with a bootstrap interval.
fn mean_curve(seps: &[f64], values: &[Vec<f64>], meta: CurveMeta) -> ergoprop::Result<DecayCurve> {
    let points = seps
        .iter()
        .enumerate()
        .map(|(j, &sep)| {
            let col: Vec<f64> = values.iter().map(|v| v[j]).collect();
            let b = ergoprop::stats::bootstrap_mean(&col, TAG_CURVE ^ ((j as u64) << 8));
            CurvePoint {
                sep,
                value: b.estimate,
                ci_low: b.ci_low,
                ci_high: b.ci_high,
            }
        })
        .collect();
    DecayCurve::new(points, meta)
}

const SEED_STREAMS: &str = "realization seeds master+k, k < count (see seeds.csv)";
