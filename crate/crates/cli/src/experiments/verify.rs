//! Invariant suite for one model: metric sandwich, propagator exactness,
//! contraction inequality, strict positivity and Perron-Frobenius residuals.

use ergoprop::environment::{realize, EnvRealization};
use ergoprop::lindblad::check_cptp;
use ergoprop::rng::{rng_stream, stream_id};
use ergoprop::states::{hilbert_d, sample_state, StateKind};
use ergoprop::superop::{contraction_coeff, pf_eigenmatrices, strict_positivity_certificate, Certificate};
use ergoprop::{ComplexMatrix, DensityMatrix, SuperOp};
use rand::Rng;
use rayon::prelude::*;

use super::{lib_err, summarize, CheckRow, Outcome, SEED_STREAMS, TAG_VERIFY};
use crate::config::{Experiment, RunConfig, VerifySpec};
use crate::error::RunError;
use crate::manifest::Emitter;

const E: Experiment = Experiment::Verify;

fn metric_rows(cfg: &RunConfig) -> Vec<CheckRow> {
    let v = &cfg.verify;
    let master = cfg.seeds.master;
    let mut rng = rng_stream(master, stream_id(&[TAG_VERIFY, 0]));
    let mut worst_sandwich = 0.0f64;
    let mut worst_boundary = 0.0f64;
    for _ in 0..v.metric_pairs {
        let rho = sample_state(&mut rng, cfg.dim, StateKind::FullRankHS);
        let delta = sample_state(&mut rng, cfg.dim, StateKind::FullRankHS);
        let tn = (rho.matrix() - delta.matrix()).trace_norm();
        let d = hilbert_d(&rho, &delta);
        worst_sandwich = worst_sandwich.max(0.5 * tn - d).max(d - tn / rho.min_eigenvalue());
        let pure = sample_state(&mut rng, cfg.dim, StateKind::HaarPure);
        worst_boundary = worst_boundary.max((hilbert_d(&rho, &pure) - 1.0).abs());
    }
    vec![
        CheckRow::at_most(master, "metric_sandwich", worst_sandwich, v.metric_tol),
        CheckRow::at_most(master, "metric_boundary", worst_boundary, 0.0),
    ]
}

fn composition_defect(real: &mut EnvRealization, v: &VerifySpec, seed: u64) -> ergoprop::Result<f64> {
    let whole = real.propagator(0.0, v.horizon)?;
    let mut rng = rng_stream(seed, stream_id(&[TAG_VERIFY, 1]));
    let mut worst = 0.0f64;
    for _ in 0..v.partitions {
        let n_cuts = rng.random_range(1..=4);
        let mut cuts: Vec<f64> = (0..n_cuts).map(|_| rng.random::<f64>() * v.horizon).collect();
        cuts.sort_by(f64::total_cmp);
        let mut times = vec![0.0];
        times.extend(cuts.into_iter().filter(|&c| c > 0.0 && c < v.horizon));
        times.push(v.horizon);
        times.dedup();
        let mut acc = SuperOp::identity(real.dim());
        for w in times.windows(2) {
            acc = real.propagator(w[0], w[1])?.compose(&acc)?;
        }
        worst = worst.max(whole.sub(&acc)?.matrix().frobenius_norm());
    }
    Ok(worst)
}

fn contraction_excess(phi: &SuperOp, cfg: &RunConfig, seed: u64) -> ergoprop::Result<(f64, f64)> {
    let mut rng = rng_stream(seed, stream_id(&[TAG_VERIFY, 2]));
    let c = contraction_coeff(phi, cfg.contraction.mode(), &mut rng)?.value;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..cfg.verify.contraction_pairs {
        let a = sample_state(&mut rng, cfg.dim, StateKind::FullRankHS);
        let b = sample_state(&mut rng, cfg.dim, StateKind::FullRankHS);
        let lhs = hilbert_d(&phi.projective_apply(&a)?, &phi.projective_apply(&b)?);
        worst = worst.max(lhs - c * hilbert_d(&a, &b));
    }
    Ok((c, worst))
}

fn seed_rows(cfg: &RunConfig, seed: u64) -> ergoprop::Result<Vec<CheckRow>> {
    let v = &cfg.verify;
    let mut real = realize(&cfg.model, seed)?;
    let mut rows = Vec::new();

    let phi = real.propagator(0.0, v.horizon)?;
    let cptp = check_cptp(&phi);
    rows.push(CheckRow::at_most(
        seed,
        "cptp",
        cptp.trace_preserving_defect.max(-cptp.choi_min_eig),
        v.cptp_tol,
    ));
    rows.push(CheckRow::at_most(seed, "composition", composition_defect(&mut real, v, seed)?, v.composition_tol));

    let (c, excess) = contraction_excess(&phi, cfg, seed)?;
    rows.push(CheckRow::at_most(seed, "contraction_inequality", excess, v.contraction_slack));
    rows.push(CheckRow::at_most(seed, "contraction_below_one", c, 1.0 - 1e-12));

    let mut rng = rng_stream(seed, stream_id(&[TAG_VERIFY, 3]));
    let cert = strict_positivity_certificate(&phi, &mut rng);
    let value = match cert {
        Certificate::CertifiedStrict { choi_min } => -choi_min,
        Certificate::CertifiedNotStrict { value, .. } => value,
        Certificate::Unknown { best } => best,
    };
    rows.push(CheckRow {
        seed,
        check: "strict_positivity",
        value,
        threshold: 0.0,
        pass: cert.is_strict(),
    });

    let unit = real.propagator(0.0, 1.0)?;
    let pf = pf_eigenmatrices(&unit)?;
    rows.push(CheckRow::at_most(seed, "pf_residual", pf.residual, v.pf_residual));
    if check_cptp(&unit).trace_preserving_defect <= v.cptp_tol {
        let mixed = DensityMatrix::maximally_mixed(cfg.dim);
        rows.push(CheckRow::at_most(seed, "pf_lambda", (pf.spectral_radius - 1.0).abs(), v.pf_lambda_tol));
        let gap: ComplexMatrix = pf.l.matrix() - mixed.matrix();
        rows.push(CheckRow::at_most(seed, "pf_left_maximally_mixed", gap.trace_norm(), v.pf_residual));
    }
    Ok(rows)
}

pub fn run(cfg: &RunConfig, em: &mut Emitter) -> Result<Outcome, RunError> {
    let mut rows = metric_rows(cfg);
    let per_seed = cfg
        .seeds
        .list()
        .par_iter()
        .map(|&seed| seed_rows(cfg, seed))
        .collect::<ergoprop::Result<Vec<_>>>()
        .map_err(lib_err(E, "checking realizations"))?;
    rows.extend(per_seed.into_iter().flatten());
    em.table(
        "verify.csv",
        &["seed", "check", "value", "threshold", "pass"],
        &rows,
        format!(
            "invariant suite; contraction {}; metric rows use the master seed",
            cfg.contraction.mode().id()
        ),
        format!("{SEED_STREAMS}; sampling streams stream_id([{TAG_VERIFY}, j]) under each seed"),
    )?;
    Ok(Outcome {
        checks: summarize(&rows),
        ..Default::default()
    })
}
