//! Lyapunov-type rate `κ` from `ĉ(φ_{0,n})` across seeds.

use ergoprop::asymptotics::{estimate_kappa, CurveMeta};
use serde::Serialize;

use super::{geometric_mean_curve, lib_err, Outcome, SEED_STREAMS};
use crate::config::{Experiment, RunConfig};
use crate::error::RunError;
use crate::manifest::{CheckResult, Emitter};

const E: Experiment = Experiment::Kappa;

#[derive(Serialize)]
struct SlopeRow {
    seed: u64,
    slope: f64,
}

#[derive(Serialize)]
struct CRow {
    seed: u64,
    n: usize,
    c_hat: f64,
}

pub fn run(cfg: &RunConfig, em: &mut Emitter) -> Result<Outcome, RunError> {
    let seeds = cfg.seeds.list();
    let seps = &cfg.kappa.separations;
    let mode = cfg.contraction.mode();
    let k = estimate_kappa(&cfg.model, &seeds, seps, mode).map_err(lib_err(E, "estimating kappa"))?;
    let streams = format!("{SEED_STREAMS}; ĉ(φ_0,n) on stream_id([21, n]) under each seed");

    let slopes: Vec<SlopeRow> = k.per_seed.iter().map(|&(seed, slope)| SlopeRow { seed, slope }).collect();
    em.table(
        "kappa_slopes.csv",
        &["seed", "slope"],
        &slopes,
        "least-squares slope of ln ĉ(φ_0,n) against n",
        streams.clone(),
    )?;
    let c_rows: Vec<CRow> = seeds
        .iter()
        .zip(&k.c_values)
        .flat_map(|(&seed, cs)| seps.iter().zip(cs).map(move |(&n, &c_hat)| CRow { seed, n, c_hat }))
        .collect();
    em.table("kappa_c.csv", &["seed", "n", "c_hat"], &c_rows, mode.id(), streams.clone())?;

    let xs: Vec<f64> = seps.iter().map(|&n| n as f64).collect();
    let meta = CurveMeta::new(cfg.model.variant(), seeds.clone(), format!("geometric_mean({})", mode.id()), 0.0);
    let curve = geometric_mean_curve(&xs, &k.c_values, meta).map_err(lib_err(E, "building the ĉ curve"))?;
    em.curve("kappa_curve", &curve, streams)?;

    let mut out = Outcome::default();
    out.metrics.insert("kappa".into(), k.kappa);
    out.metrics.insert("log_kappa".into(), k.log_kappa);
    out.metrics.insert("fit_r2".into(), k.fit_r2);
    out.checks.push(CheckResult::at_most(
        "kappa_below_one",
        k.kappa,
        1.0 - 1e-12,
        format!("pooled slope {:.6}", k.log_kappa),
    ));
    if let Some(min_r2) = cfg.kappa.min_r2 {
        out.checks.push(CheckResult::at_least("kappa_fit_r2", k.fit_r2, min_r2, "pooled log-linear fit"));
    }
    if let Some((median, iqr)) = k.slope_spread() {
        out.metrics.insert("slope_median".into(), median);
        out.metrics.insert("slope_iqr".into(), iqr);
        if let Some(ratio) = cfg.kappa.max_iqr_ratio {
            out.checks.push(CheckResult::at_most(
                "slope_concentration",
                iqr / median.abs(),
                ratio,
                format!("IQR {iqr:.4e} around median {median:.4e}"),
            ));
        }
    }
    Ok(out)
}
