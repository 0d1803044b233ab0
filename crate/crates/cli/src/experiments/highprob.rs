//! Deviation frequencies against the Markov bound built from `Ê[ĉ]`.

use ergoprop::asymptotics::{default_probes, LimitConfig};
use ergoprop::mixing::{highprob_check, DeviationRow};

use super::{lib_err, Outcome, SEED_STREAMS};
use crate::config::{Experiment, RunConfig};
use crate::error::RunError;
use crate::manifest::{CheckResult, Emitter};

const E: Experiment = Experiment::Highprob;

pub fn run(cfg: &RunConfig, em: &mut Emitter) -> Result<Outcome, RunError> {
    let h = &cfg.highprob;
    let limits = LimitConfig {
        horizons: LimitConfig::standard(cfg.dim, h.deepest).horizons,
        probes: default_probes(cfg.dim, cfg.seeds.master),
    };
    let pairs: Vec<(f64, f64)> = h.separations.iter().map(|&sep| (h.s, h.s + sep)).collect();
    let report = highprob_check(
        &cfg.model,
        &pairs,
        &h.a_schedule,
        &cfg.seeds.list(),
        &limits,
        cfg.contraction.mode(),
    )
    .map_err(lib_err(E, "estimating deviation frequencies"))?;
    let rows: Vec<&DeviationRow> = report.rows.iter().collect();
    em.table(
        "highprob.csv",
        &["kind", "s", "t", "a", "frequency", "bound", "std_err", "pass"],
        &rows,
        format!(
            "empirical P(error > a) vs factor·Ê[ĉ]/a, bootstrap s.e. of the difference; {}",
            cfg.contraction.mode().id()
        ),
        format!("{SEED_STREAMS}; δ and ĉ on stream_id([31, s.to_bits(), t.to_bits()]); bootstrap seed 0xB007"),
    )?;
    let worst = report
        .rows
        .iter()
        .map(|r| r.frequency - r.bound - 3.0 * r.std_err)
        .fold(f64::NEG_INFINITY, f64::max);
    let failed = report.rows.iter().filter(|r| !r.pass).count();
    let mut out = Outcome::default();
    out.checks.push(CheckResult {
        name: "deviation_frequency_bound".into(),
        pass: report.pass,
        measured: worst,
        threshold: 0.0,
        detail: format!("max of frequency − bound − 3·s.e.; {failed} of {} failed", report.rows.len()),
    });
    Ok(out)
}
