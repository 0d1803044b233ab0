//! Rank-one limit `φ̃_{s,t} ≈ Ξ_{s,t}` and the cocycle identities of the
//! limit states.

use ergoprop::asymptotics::{
    cocycle_check, cocycle_check_adjoint, default_probes, estimate_z, estimate_zprime, rank_one_error_curve,
    CocycleReport, CurveMeta, LimitConfig, RankOneMode,
};
use ergoprop::environment::realize;
use rayon::prelude::*;
use serde::Serialize;

use super::{lib_err, mean_curve, Outcome, SEED_STREAMS};
use crate::config::{Experiment, RunConfig};
use crate::error::RunError;
use crate::manifest::{CheckResult, Emitter};

const E: Experiment = Experiment::Rankone;

#[derive(Serialize)]
struct ErrorRow {
    seed: u64,
    mode: &'static str,
    t: f64,
    error: f64,
    c_hat: f64,
    z_diameter: f64,
    bound: f64,
    pass: bool,
}

#[derive(Serialize)]
struct CocycleRow {
    seed: u64,
    kind: &'static str,
    time: f64,
    residual: f64,
    bound: f64,
    pass: bool,
}

struct SeedResult {
    errors: Vec<ErrorRow>,
    cocycles: Vec<CocycleRow>,
}

fn cocycle_rows(seed: u64, kind: &'static str, times: &[f64], rep: CocycleReport) -> Vec<CocycleRow> {
    times
        .iter()
        .zip(rep.residuals.iter().zip(&rep.bounds))
        .map(|(&time, (&residual, &bound))| CocycleRow {
            seed,
            kind,
            time,
            residual,
            bound,
            pass: residual <= bound,
        })
        .collect()
}

fn one_seed(cfg: &RunConfig, seed: u64) -> ergoprop::Result<SeedResult> {
    let r = &cfg.rankone;
    let limits = LimitConfig {
        horizons: LimitConfig::standard(cfg.dim, r.deepest).horizons,
        probes: default_probes(cfg.dim, cfg.seeds.master),
    };
    let mut real = realize(&cfg.model, seed)?;
    let mut errors = Vec::new();
    for (mode, name, factor) in [
        (RankOneMode::StateSup(r.n_states), "state_sup", 4.0),
        (RankOneMode::Norm1to1, "norm_1to1", 8.0),
    ] {
        let curve = rank_one_error_curve(&mut real, r.s, &r.t_grid, mode, &limits, cfg.contraction.mode())?;
        for ((p, &c_hat), &z_diameter) in curve.curve.points.iter().zip(&curve.c_hat).zip(&curve.z_diameters) {
            let bound = factor * c_hat + r.diameter_slack * z_diameter + 1e-9;
            errors.push(ErrorRow {
                seed,
                mode: name,
                t: r.s + p.sep,
                error: p.value,
                c_hat,
                z_diameter,
                bound,
                pass: p.value <= bound,
            });
        }
    }

    let (h, probes) = (&limits.horizons, &limits.probes);
    let s_grid = [r.s - 3.0, r.s - 1.5, r.s];
    let t = r.s + 2.0;
    let zs = s_grid
        .iter()
        .map(|&s| estimate_z(&mut real, s, h, probes))
        .collect::<ergoprop::Result<Vec<_>>>()?;
    let zt = estimate_z(&mut real, t, h, probes)?;
    let mut cocycles = cocycle_rows(seed, "forward", &s_grid, cocycle_check(&mut real, &s_grid, t, &zs, &zt)?);
    let t_grid = [r.s + 1.0, r.s + 2.5, r.s + 4.0];
    let zps = estimate_zprime(&mut real, r.s, h, probes)?;
    let zpt = t_grid
        .iter()
        .map(|&t| estimate_zprime(&mut real, t, h, probes))
        .collect::<ergoprop::Result<Vec<_>>>()?;
    let adj = cocycle_check_adjoint(&mut real, r.s, &t_grid, &zps, &zpt)?;
    cocycles.extend(cocycle_rows(seed, "adjoint", &t_grid, adj));
    Ok(SeedResult { errors, cocycles })
}

fn excess_check<'a>(name: &str, pairs: impl Iterator<Item = (f64, f64)> + 'a) -> CheckResult {
    let (mut worst, mut failed, mut total) = (f64::NEG_INFINITY, 0, 0);
    for (value, bound) in pairs {
        worst = worst.max(value - bound);
        failed += usize::from(value > bound);
        total += 1;
    }
    CheckResult {
        name: name.into(),
        pass: failed == 0,
        measured: worst,
        threshold: 0.0,
        detail: format!("max of value − bound; {failed} of {total} failed"),
    }
}

pub fn run(cfg: &RunConfig, em: &mut Emitter) -> Result<Outcome, RunError> {
    let r = &cfg.rankone;
    let seeds = cfg.seeds.list();
    let results = seeds
        .par_iter()
        .map(|&seed| one_seed(cfg, seed))
        .collect::<ergoprop::Result<Vec<_>>>()
        .map_err(lib_err(E, "computing rank-one errors"))?;
    let streams = format!(
        "{SEED_STREAMS}; probes default_probes(dim, master); error states on seed ^ t.to_bits(); ĉ on stream_id([23, 1, t.to_bits()])"
    );

    let errors: Vec<&ErrorRow> = results.iter().flat_map(|s| &s.errors).collect();
    em.table(
        "rankone_points.csv",
        &["seed", "mode", "t", "error", "c_hat", "z_diameter", "bound", "pass"],
        &errors,
        format!(
            "state_sup over {} states, norm_1to1 with 8 restarts; {}",
            r.n_states,
            cfg.contraction.mode().id()
        ),
        streams.clone(),
    )?;
    let seps: Vec<f64> = r.t_grid.iter().map(|t| t - r.s).collect();
    for (name, stem) in [("state_sup", "rankone_state"), ("norm_1to1", "rankone_norm")] {
        let values: Vec<Vec<f64>> = results
            .iter()
            .map(|s| s.errors.iter().filter(|e| e.mode == name).map(|e| e.error).collect())
            .collect();
        let meta = CurveMeta::new(cfg.model.variant(), seeds.clone(), format!("mean rank-one error ({name})"), 0.0);
        let curve = mean_curve(&seps, &values, meta).map_err(lib_err(E, "building the curve"))?;
        em.curve(stem, &curve, streams.clone())?;
    }
    let cocycles: Vec<&CocycleRow> = results.iter().flat_map(|s| &s.cocycles).collect();
    em.table(
        "cocycle.csv",
        &["seed", "kind", "time", "residual", "bound", "pass"],
        &cocycles,
        "‖φ·Ẑ_s − Ẑ_t‖₁ and ‖φ†·Ẑ'_t − Ẑ'_s‖₁ against 5 × summed diameters + 1e-12",
        streams,
    )?;

    let mut out = Outcome::default();
    for (name, mode) in [("rankone_state_bound", "state_sup"), ("rankone_norm_bound", "norm_1to1")] {
        out.checks.push(excess_check(
            name,
            errors.iter().filter(|e| e.mode == mode).map(|e| (e.error, e.bound)),
        ));
    }
    for (name, kind) in [("cocycle_forward", "forward"), ("cocycle_adjoint", "adjoint")] {
        out.checks.push(excess_check(
            name,
            cocycles.iter().filter(|c| c.kind == kind).map(|c| (c.residual, c.bound)),
        ));
    }
    Ok(out)
}
