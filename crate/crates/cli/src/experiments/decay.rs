//! Forward convergence: the `d`-diameter of `φ_{t−a,t} · probes` as the
//! horizon `a` grows.

use ergoprop::asymptotics::{default_probes, estimate_z, CurveMeta};
use ergoprop::environment::{realize, EnvironmentModel};
use ergoprop::rng::{rng_stream, stream_id};
use ergoprop::stats::fit_line;
use ergoprop::superop::{contraction_coeff, pf_eigenmatrices, SuperOp};
use rayon::prelude::*;
use serde::Serialize;

use super::{geometric_mean_curve, lib_err, Outcome, SEED_STREAMS, TAG_DECAY};
use crate::config::{Experiment, FitScope, RunConfig};
use crate::error::RunError;
use crate::manifest::{CheckResult, Emitter};

const E: Experiment = Experiment::Decay;

#[derive(Serialize)]
struct PointRow {
    seed: u64,
    horizon: f64,
    diameter: f64,
    c_hat: f64,
    bound: f64,
    pass: bool,
}

struct SeedResult {
    rows: Vec<PointRow>,
    /// `‖Ẑ − R‖₁` at the deepest horizon, frozen disorder only.
    pf_gap: Option<f64>,
}

fn one_seed(cfg: &RunConfig, seed: u64) -> ergoprop::Result<SeedResult> {
    let d = &cfg.decay;
    let probes = default_probes(cfg.dim, cfg.seeds.master);
    let mut real = realize(&cfg.model, seed)?;
    let z = estimate_z(&mut real, d.t, &d.horizons, &probes)?;
    let mut rows = Vec::with_capacity(d.horizons.len());
    let mut acc: Option<(f64, SuperOp)> = None;
    for (k, &(a, diameter)) in z.trace.iter().enumerate() {
        let phi = match acc.take() {
            None => real.propagator(d.t - a, d.t)?,
            Some((prev_a, prev)) => prev.compose(&real.propagator(d.t - a, d.t - prev_a)?)?,
        };
        let mut rng = rng_stream(seed, stream_id(&[TAG_DECAY, k as u64]));
        let c_hat = contraction_coeff(&phi, cfg.contraction.mode(), &mut rng)?.value;
        let bound = 2.0 * c_hat + d.slack;
        rows.push(PointRow {
            seed,
            horizon: a,
            diameter,
            c_hat,
            bound,
            pass: diameter <= bound,
        });
        acc = Some((a, phi));
    }
    let pf_gap = match cfg.model {
        EnvironmentModel::FrozenDisorder { .. } => {
            let pf = pf_eigenmatrices(&real.propagator(0.0, 1.0)?)?;
            Some((z.z.matrix() - pf.r.matrix()).trace_norm())
        }
        _ => None,
    };
    Ok(SeedResult { rows, pf_gap })
}

pub fn run(cfg: &RunConfig, em: &mut Emitter) -> Result<Outcome, RunError> {
    let d = &cfg.decay;
    let seeds = cfg.seeds.list();
    let results = seeds
        .par_iter()
        .map(|&seed| one_seed(cfg, seed))
        .collect::<ergoprop::Result<Vec<_>>>()
        .map_err(lib_err(E, "estimating image diameters"))?;
    let streams = format!(
        "{SEED_STREAMS}; probes default_probes(dim, master); ĉ on stream_id([{TAG_DECAY}, k]) under each seed"
    );

    let rows: Vec<&PointRow> = results.iter().flat_map(|r| &r.rows).collect();
    em.table(
        "decay_points.csv",
        &["seed", "horizon", "diameter", "c_hat", "bound", "pass"],
        &rows,
        format!("max pairwise d over probe images; {}", cfg.contraction.mode().id()),
        streams.clone(),
    )?;
    let diam: Vec<Vec<f64>> = results.iter().map(|r| r.rows.iter().map(|p| p.diameter).collect()).collect();
    let meta = CurveMeta::new(cfg.model.variant(), seeds.clone(), "geometric_mean(probe image diameter)", d.slack);
    let curve = geometric_mean_curve(&d.horizons, &diam, meta).map_err(lib_err(E, "building the curve"))?;
    em.curve("decay_curve", &curve, streams)?;

    let mut out = Outcome::default();
    let fit_of = |pts: &[&PointRow]| {
        let (xs, ys): (Vec<f64>, Vec<f64>) = pts
            .iter()
            .filter(|p| p.diameter > d.fit_floor)
            .map(|p| (p.horizon, p.diameter.ln()))
            .unzip();
        fit_line(&xs, &ys)
    };
    if let Some(f) = fit_of(&rows) {
        out.metrics.insert("log_diameter_slope".into(), f.slope);
        out.metrics.insert("log_diameter_r2".into(), f.r2);
    }
    let (r2, detail) = match d.fit_scope {
        FitScope::Pooled => (
            fit_of(&rows).map_or(f64::NAN, |f| f.r2),
            "pooled over seeds and horizons".to_string(),
        ),
        FitScope::PerSeed => {
            let per_seed: Vec<f64> = results
                .iter()
                .map(|r| fit_of(&r.rows.iter().collect::<Vec<_>>()).map_or(f64::NAN, |f| f.r2))
                .collect();
            let worst = per_seed.iter().copied().fold(f64::INFINITY, f64::min);
            (worst, format!("worst of {} per-seed fits", per_seed.len()))
        }
    };
    out.checks.push(CheckResult::at_least(
        "diameter_log_linear_fit",
        r2,
        d.min_r2,
        format!("{detail}; diameters above {:e}", d.fit_floor),
    ));
    let worst = rows.iter().map(|p| p.diameter - p.bound).fold(f64::NEG_INFINITY, f64::max);
    let failed = rows.iter().filter(|p| !p.pass).count();
    out.checks.push(CheckResult {
        name: "diameter_within_contraction".into(),
        pass: failed == 0,
        measured: worst,
        threshold: 0.0,
        detail: format!("max of diameter − (2ĉ + {}); {failed} of {} failed", d.slack, rows.len()),
    });
    let gaps: Vec<f64> = results.iter().filter_map(|r| r.pf_gap).collect();
    if !gaps.is_empty() {
        let worst = gaps.iter().copied().fold(0.0, f64::max);
        out.checks.push(CheckResult::at_most(
            "z_matches_pf_eigenmatrix",
            worst,
            d.pf_tol,
            format!("‖Ẑ − R‖₁ at horizon {}", d.horizons[d.horizons.len() - 1]),
        ));
    }
    Ok(out)
}
