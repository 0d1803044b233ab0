//! Mixing coefficients on finite laws, the decay of `E ĉ(φ_{0,n})`, the
//! modulating-chain surrogate and the sampled correlation lower bound.

use ergoprop::asymptotics::CurveMeta;
use ergoprop::environment::EnvironmentModel;
use ergoprop::mixing::{
    contraction_functional, correlation_proxy, expectation_decay_curve, mixing_coeffs_finite,
    modulating_chain_phi_mixing, FiniteJointPMF, MixingPoint,
};
use ergoprop::rng::{rng_stream, stream_id};
use rand::Rng;
use serde::Serialize;

use super::{lib_err, Outcome, SEED_STREAMS, TAG_PMF};
use crate::config::{Experiment, RunConfig};
use crate::error::RunError;
use crate::manifest::{CheckResult, Emitter};

const E: Experiment = Experiment::Mixing;

#[derive(Serialize)]
struct PmfRow {
    index: usize,
    rows: usize,
    cols: usize,
    rho: f64,
    psi: f64,
    phi_fwd: f64,
    phi_bwd: f64,
    pass: bool,
}

#[derive(Serialize)]
struct ChainRow {
    n: usize,
    phi_tv: f64,
}

/// Random joint law with a few zero cells, so that null events occur.
fn random_pmf(master: u64, index: usize, max_support: usize) -> ergoprop::Result<FiniteJointPMF> {
    let mut rng = rng_stream(master, stream_id(&[TAG_PMF, index as u64]));
    let a = rng.random_range(2..=max_support);
    let b = rng.random_range(2..=max_support);
    let mut raw: Vec<Vec<f64>> = (0..a)
        .map(|_| {
            (0..b)
                .map(|_| if rng.random::<f64>() < 0.15 { 0.0 } else { rng.random::<f64>() })
                .collect()
        })
        .collect();
    if raw.iter().flatten().all(|&x| x == 0.0) {
        raw[0][0] = 1.0;
    }
    let total: f64 = raw.iter().flatten().sum();
    FiniteJointPMF::new(raw.into_iter().map(|r| r.into_iter().map(|x| x / total).collect()).collect())
}

fn pmf_rows(cfg: &RunConfig) -> ergoprop::Result<Vec<PmfRow>> {
    let m = &cfg.mixing;
    (0..m.pmf_count)
        .map(|index| {
            let p = random_pmf(cfg.seeds.master, index, m.pmf_max_support)?;
            let c = mixing_coeffs_finite(&p)?;
            let (rows, cols) = p.shape();
            let pass = c.rho <= c.psi + m.pmf_tol && c.rho <= 2.0 * c.phi_fwd.min(c.phi_bwd).sqrt() + m.pmf_tol;
            Ok(PmfRow {
                index,
                rows,
                cols,
                rho: c.rho,
                psi: c.psi,
                phi_fwd: c.phi_fwd,
                phi_bwd: c.phi_bwd,
                pass,
            })
        })
        .collect()
}

pub fn run(cfg: &RunConfig, em: &mut Emitter) -> Result<Outcome, RunError> {
    let m = &cfg.mixing;
    let seeds = cfg.seeds.list();
    let mode = cfg.contraction.mode();
    let mut out = Outcome::default();

    let pmfs = pmf_rows(cfg).map_err(lib_err(E, "enumerating finite laws"))?;
    em.table(
        "mixing_pmf.csv",
        &["index", "rows", "cols", "rho", "psi", "phi_fwd", "phi_bwd", "pass"],
        &pmfs,
        "exact enumeration of events on random finite joint laws",
        format!("law k on stream_id([{TAG_PMF}, k]) under the master seed"),
    )?;
    let failed = pmfs.iter().filter(|r| !r.pass).count();
    let worst = pmfs
        .iter()
        .map(|r| (r.rho - r.psi).max(r.rho - 2.0 * r.phi_fwd.min(r.phi_bwd).sqrt()))
        .fold(f64::NEG_INFINITY, f64::max);
    out.checks.push(CheckResult {
        name: "pmf_coefficient_inequalities".into(),
        pass: failed == 0,
        measured: worst,
        threshold: m.pmf_tol,
        detail: format!("ρ ≤ ψ and ρ ≤ 2√φ; {failed} of {} failed", pmfs.len()),
    });
    let coin = FiniteJointPMF::new(vec![vec![0.5, 0.0], vec![0.0, 0.5]])
        .and_then(|p| mixing_coeffs_finite(&p))
        .map_err(lib_err(E, "evaluating the coin law"))?;
    let coin_gap = (coin.rho - 1.0)
        .abs()
        .max((coin.psi - 1.0).abs())
        .max((coin.phi_fwd - 0.5).abs())
        .max((coin.phi_bwd - 0.5).abs());
    out.checks.push(CheckResult::at_most("coin_coefficients", coin_gap, m.pmf_tol, "X = Y fair coin gives (1, 1, 1/2)"));

    let curve = expectation_decay_curve(&cfg.model, &m.n_grid, &seeds, mode)
        .map_err(lib_err(E, "estimating E ĉ(φ_0,n)"))?;
    let streams = format!("{SEED_STREAMS}; ĉ(φ_0,n) on stream_id([21, n]); bootstrap seed 0xB007 stream n");
    let points: Vec<&MixingPoint> = curve.points.iter().collect();
    em.table(
        "mixing_expectation.csv",
        &["n", "mean_c", "ci_low", "ci_high", "std_err", "n_samples"],
        &points,
        format!("mean of {} over seeds, percentile bootstrap", mode.id()),
        streams.clone(),
    )?;
    let meta = CurveMeta::new(cfg.model.variant(), seeds.clone(), format!("mean({})", mode.id()), 0.0);
    let decay = curve.to_decay_curve(meta).map_err(lib_err(E, "building the curve"))?;
    em.curve("mixing_curve", &decay, streams)?;
    for (prefix, fit) in [("exp", curve.exponential), ("pow", curve.power_law)] {
        if let Some(f) = fit {
            out.metrics.insert(format!("{prefix}_rate"), f.rate);
            out.metrics.insert(format!("{prefix}_r2"), f.r2);
        }
    }
    if let Some(min_r2) = m.min_exp_r2 {
        let (r2, rate) = curve.exponential.map_or((f64::NAN, f64::NAN), |f| (f.r2, f.rate));
        out.checks.push(CheckResult {
            name: "expectation_exponential_fit".into(),
            pass: r2 >= min_r2 && rate < 0.0,
            measured: r2,
            threshold: min_r2,
            detail: format!("rate {rate:.6}"),
        });
    }
    let violations = curve.submultiplicativity_violations();
    out.checks.push(CheckResult::at_most(
        "expectation_submultiplicativity",
        violations.len() as f64,
        0.0,
        format!("violating (n, m): {violations:?}"),
    ));

    if let EnvironmentModel::MarkovModulated { q, pi, .. } = &cfg.model {
        let chain = modulating_chain_phi_mixing(q, Some(pi), &m.n_grid).map_err(lib_err(E, "chain surrogate"))?;
        let rows: Vec<ChainRow> = chain.into_iter().map(|(n, phi_tv)| ChainRow { n, phi_tv }).collect();
        em.table(
            "mixing_chain.csv",
            &["n", "phi_tv"],
            &rows,
            "max_i TV(Pⁿ(i,·), π) with P = exp(Q), exact",
            "deterministic",
        )?;
    }

    let proxy = correlation_proxy(&cfg.model, &m.proxy_grid, &seeds, &contraction_functional, &contraction_functional)
        .map_err(lib_err(E, "correlation proxy"))?;
    em.curve(
        "mixing_proxy",
        &proxy.curve,
        format!("{SEED_STREAMS}; functional ĉ on stream_id([30]) under master 0"),
    )?;
    out.metrics.insert("proxy_degenerate_points".into(), proxy.degenerate.len() as f64);
    Ok(out)
}
