//! Estimators for the forward convergence of propagators: the limit states
//! `Z_t` and `Z'_s`, the rate `κ`, the threshold `T_{λ,r}`, the rank-one
//! limit `Ξ_{s,t}` and the cocycle identities.
//!
//! Every `ĉ` here is the sampled lower bound from
//! [`contraction_coeff`](crate::superop::contraction_coeff). Inequalities
//! with `c` on the right-hand side are therefore checked with an explicit
//! slack.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::environment::{realize, EnvRealization, EnvironmentModel};
use crate::error::{Error, Result};
use crate::matkernel::ComplexMatrix;
use crate::rng::{rng_stream, stream_id};
use crate::states::{hilbert_d, make_state, sample_state, DensityMatrix, StateKind};
use crate::stats::{fit_line, quantile};
use crate::superop::{contraction_coeff, norm_1to1, ContractionMode, SuperOp};

const TAG_PROBES: u64 = 20;
const TAG_KAPPA: u64 = 21;
const TAG_THRESHOLD: u64 = 22;
const TAG_RANKONE: u64 = 23;

// ---------------------------------------------------------------------------
// Decay curves

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub sep: f64,
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub model: String,
    pub seeds: Vec<u64>,
    pub estimator: String,
    pub slack: f64,
    pub created: String,
}

/// A sampled `(separation, value, ci_low, ci_high)` series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayCurve {
    pub points: Vec<CurvePoint>,
    pub meta: CurveMeta,
}

fn created_stamp() -> String {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    format!("unix:{secs}")
}

impl CurveMeta {
    pub fn new(model: impl Into<String>, seeds: Vec<u64>, estimator: impl Into<String>, slack: f64) -> Self {
        Self {
            model: model.into(),
            seeds,
            estimator: estimator.into(),
            slack,
            created: created_stamp(),
        }
    }
}

impl DecayCurve {
    /// Checks that separations strictly increase and values are nonnegative.
    pub fn new(points: Vec<CurvePoint>, meta: CurveMeta) -> Result<Self> {
        if points.windows(2).any(|w| !(w[0].sep < w[1].sep)) {
            return Err(Error::InvalidArgument("curve separations must strictly increase".into()));
        }
        if points.iter().any(|p| !(p.value >= 0.0)) {
            return Err(Error::InvalidArgument("curve values must be nonnegative".into()));
        }
        Ok(Self { points, meta })
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    /// CSV with header `sep,value,ci_low,ci_high`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for p in &self.points {
            w.serialize(p).map_err(|e| Error::Io(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }

    /// Writes `<stem>.csv` and the `<stem>.json` sidecar into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir)?;
        let csv_path = dir.join(format!("{stem}.csv"));
        let json_path = dir.join(format!("{stem}.json"));
        fs::write(&csv_path, self.to_csv()?)?;
        let meta = serde_json::to_string_pretty(&self.meta).map_err(|e| Error::Io(e.to_string()))?;
        fs::write(&json_path, meta)?;
        Ok((csv_path, json_path))
    }
}

// ---------------------------------------------------------------------------
// Limit states

/// `4` Haar-pure and `4` Hilbert-Schmidt states from a fixed stream.
pub fn default_probes(dim: usize, seed: u64) -> Vec<DensityMatrix> {
    let mut rng = rng_stream(seed, stream_id(&[TAG_PROBES]));
    let mut out: Vec<DensityMatrix> = (0..4).map(|_| sample_state(&mut rng, dim, StateKind::HaarPure)).collect();
    out.extend((0..4).map(|_| sample_state(&mut rng, dim, StateKind::FullRankHS)));
    out
}

/// Limit state estimate with its error certificate.
#[derive(Debug, Clone)]
pub struct RankOneLimit {
    /// Mean of the deepest images.
    pub z: DensityMatrix,
    /// Largest pairwise `d` among the deepest images.
    pub diameter: f64,
    pub horizon: f64,
    /// `(horizon, diameter)` for every horizon used.
    pub trace: Vec<(f64, f64)>,
}

fn diameter(states: &[DensityMatrix]) -> f64 {
    let mut m = 0.0f64;
    for i in 0..states.len() {
        for j in i + 1..states.len() {
            m = m.max(hilbert_d(&states[i], &states[j]));
        }
    }
    m
}

fn mean_state(states: &[DensityMatrix]) -> Result<DensityMatrix> {
    let d = states[0].dim();
    let mut acc = ComplexMatrix::zeros(d);
    for s in states {
        acc = &acc + s.matrix();
    }
    make_state(&acc.scale_real(1.0 / states.len() as f64))
}

fn check_limit_args(horizons: &[f64], probes: &[DensityMatrix]) -> Result<()> {
    if probes.is_empty() {
        return Err(Error::InvalidArgument("at least one probe state is required".into()));
    }
    if horizons.is_empty() || horizons[0] <= 0.0 || horizons.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument("horizons must be positive and increasing".into()));
    }
    Ok(())
}

fn limit_from(
    horizons: &[f64],
    probes: &[DensityMatrix],
    mut map_at: impl FnMut(usize) -> Result<SuperOp>,
) -> Result<RankOneLimit> {
    check_limit_args(horizons, probes)?;
    let mut trace = Vec::with_capacity(horizons.len());
    let mut images = Vec::new();
    for (k, &a) in horizons.iter().enumerate() {
        let phi = map_at(k)?;
        images = probes
            .iter()
            .map(|p| phi.projective_apply(p))
            .collect::<Result<Vec<_>>>()?;
        trace.push((a, diameter(&images)));
    }
    let (horizon, diam) = *trace.last().expect("nonempty horizons");
    if diam >= 0.5 {
        return Err(Error::NonContracting(format!(
            "image diameter {diam:.3} at horizon {horizon}"
        )));
    }
    Ok(RankOneLimit {
        z: mean_state(&images)?,
        diameter: diam,
        horizon,
        trace,
    })
}

/// `Z_t` from the nested images `φ_{t−a,t} · probes` over increasing `a`.
pub fn estimate_z(
    real: &mut EnvRealization,
    t: f64,
    horizons: &[f64],
    probes: &[DensityMatrix],
) -> Result<RankOneLimit> {
    let mut acc: Option<(f64, SuperOp)> = None;
    limit_from(horizons, probes, |k| {
        let a = horizons[k];
        let phi = match acc.take() {
            None => real.propagator(t - a, t)?,
            Some((prev_a, prev)) => prev.compose(&real.propagator(t - a, t - prev_a)?)?,
        };
        acc = Some((a, phi.clone()));
        Ok(phi)
    })
}

/// `Z'_s` from the nested images `φ†_{s,s+a} · probes` over increasing `a`.
pub fn estimate_zprime(
    real: &mut EnvRealization,
    s: f64,
    horizons: &[f64],
    probes: &[DensityMatrix],
) -> Result<RankOneLimit> {
    let mut acc: Option<(f64, SuperOp)> = None;
    limit_from(horizons, probes, |k| {
        let a = horizons[k];
        let phi = match acc.take() {
            None => real.propagator(s, s + a)?,
            Some((prev_a, prev)) => real.propagator(s + prev_a, s + a)?.compose(&prev)?,
        };
        let adj = phi.adjoint();
        acc = Some((a, phi));
        Ok(adj)
    })
}

// ---------------------------------------------------------------------------
// κ

#[derive(Debug, Clone)]
pub struct KappaEstimate {
    /// Pooled slope of `ln ĉ(φ_{0,n})` against `n`; `−∞` when `ĉ` hits zero.
    pub log_kappa: f64,
    pub kappa: f64,
    pub fit_r2: f64,
    /// `(seed, slope)`; a slope of `−∞` marks a seed whose `ĉ` reached zero.
    pub per_seed: Vec<(u64, f64)>,
    /// `ĉ(φ_{0,n})` per seed, aligned with the separations.
    pub c_values: Vec<Vec<f64>>,
}

impl KappaEstimate {
    /// Median and interquartile range of the finite per-seed slopes.
    pub fn slope_spread(&self) -> Option<(f64, f64)> {
        let s: Vec<f64> = self.per_seed.iter().map(|p| p.1).filter(|x| x.is_finite()).collect();
        if s.is_empty() {
            return None;
        }
        Some((quantile(&s, 0.5), quantile(&s, 0.75) - quantile(&s, 0.25)))
    }
}

/// `ĉ(φ^ω_{0,n})` for every `n` in `separations` (positive, increasing).
pub fn contraction_series(
    real: &mut EnvRealization,
    separations: &[usize],
    mode: ContractionMode,
) -> Result<Vec<f64>> {
    let max_n = *separations.last().unwrap_or(&0);
    let mut out = Vec::with_capacity(separations.len());
    let mut acc: Option<SuperOp> = None;
    let mut next = 0;
    for n in 1..=max_n {
        let step = real.propagator((n - 1) as f64, n as f64)?;
        let phi = match acc {
            None => step,
            Some(a) => step.compose(&a)?,
        };
        if separations[next] == n {
            let mut rng = rng_stream(real.seed(), stream_id(&[TAG_KAPPA, n as u64]));
            out.push(contraction_coeff(&phi, mode, &mut rng)?.value);
            next += 1;
        }
        acc = Some(phi);
    }
    Ok(out)
}

fn check_separations(separations: &[usize], min_len: usize) -> Result<()> {
    if separations.len() < min_len
        || separations[0] == 0
        || separations.windows(2).any(|w| w[0] >= w[1])
    {
        return Err(Error::InvalidArgument(format!(
            "need at least {min_len} positive increasing separations"
        )));
    }
    Ok(())
}

/// Per-seed and pooled least-squares rate of `ln ĉ(φ_{0,n})`.
pub fn estimate_kappa(
    model: &EnvironmentModel,
    seeds: &[u64],
    separations: &[usize],
    mode: ContractionMode,
) -> Result<KappaEstimate> {
    check_separations(separations, 5)?;
    let c_values = seeds
        .par_iter()
        .map(|&seed| {
            let mut real = realize(model, seed)?;
            contraction_series(&mut real, separations, mode)
        })
        .collect::<Result<Vec<_>>>()?;
    let last = separations.len() - 1;
    if c_values.iter().all(|c| c[last] >= 1.0 - 1e-12) {
        return Err(Error::NonContracting(format!(
            "ĉ = 1 at separation {} for every seed",
            separations[last]
        )));
    }
    let xs: Vec<f64> = separations.iter().map(|&n| n as f64).collect();
    let mut pooled_x = Vec::new();
    let mut pooled_y = Vec::new();
    let per_seed = seeds
        .iter()
        .zip(&c_values)
        .map(|(&seed, c)| {
            if c.iter().any(|&v| v == 0.0) {
                return (seed, f64::NEG_INFINITY);
            }
            let ys: Vec<f64> = c.iter().map(|v| v.ln()).collect();
            pooled_x.extend_from_slice(&xs);
            pooled_y.extend_from_slice(&ys);
            (seed, fit_line(&xs, &ys).map_or(0.0, |f| f.slope.min(0.0)))
        })
        .collect::<Vec<_>>();
    let (log_kappa, fit_r2) = match fit_line(&pooled_x, &pooled_y) {
        Some(f) => (f.slope.min(0.0), f.r2),
        None => (f64::NEG_INFINITY, 1.0),
    };
    Ok(KappaEstimate {
        log_kappa,
        kappa: log_kappa.exp(),
        fit_r2,
        per_seed,
        c_values,
    })
}

// ---------------------------------------------------------------------------
// Threshold T

/// Width of the window `[T, T + WINDOW]` checked for each candidate `T`.
pub const THRESHOLD_WINDOW: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    pub t: usize,
    /// `μ_λ = λκ̂ + 1 − λ`.
    pub mu: f64,
}

fn c_table(
    real: &mut EnvRealization,
    s_values: &[i64],
    t_max: usize,
    mode: ContractionMode,
    stream: u64,
) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    s_values
        .iter()
        .map(|&s| {
            let s = s as f64;
            let mut fwd = vec![1.0];
            let mut bwd = vec![1.0];
            let mut f_acc: Option<SuperOp> = None;
            let mut b_acc: Option<SuperOp> = None;
            for t in 1..=t_max {
                let tf = t as f64;
                let fs = real.propagator(s + tf - 1.0, s + tf)?;
                let f = match f_acc {
                    None => fs,
                    Some(a) => fs.compose(&a)?,
                };
                let bs = real.propagator(s - tf, s - tf + 1.0)?;
                let b = match b_acc {
                    None => bs,
                    Some(a) => a.compose(&bs)?,
                };
                let mut rng = rng_stream(real.seed(), stream_id(&[TAG_THRESHOLD, stream, s.to_bits(), t as u64]));
                fwd.push(contraction_coeff(&f, mode, &mut rng)?.value);
                bwd.push(contraction_coeff(&b, mode, &mut rng)?.value);
                f_acc = Some(f);
                b_acc = Some(b);
            }
            Ok((fwd, bwd))
        })
        .collect()
}

fn mu_lambda(lambda: f64, kappa_hat: f64) -> f64 {
    lambda * kappa_hat + (1.0 - lambda)
}

/// Smallest integer `T ≥ 2` with
/// `max(ĉ(φ_{s,s+t}), ĉ(φ_{s−t,s})) ≤ μ_λ^{t−2}` for all integer
/// `s ∈ [−⌈r⌉, ⌈r⌉]` and `t ∈ [T, T + 16]`, searched up to `t_max`.
pub fn empirical_threshold(
    real: &mut EnvRealization,
    lambda: f64,
    r: f64,
    kappa_hat: f64,
    t_max: usize,
    mode: ContractionMode,
) -> Result<Threshold> {
    if !(lambda > 0.0 && lambda < 1.0) || !(kappa_hat >= 0.0 && kappa_hat < 1.0) || !(r >= 0.0) {
        return Err(Error::InvalidArgument("need λ ∈ (0,1), κ̂ ∈ [0,1), r ≥ 0".into()));
    }
    let mu = mu_lambda(lambda, kappa_hat);
    let rr = r.ceil() as i64;
    let s_values: Vec<i64> = (-rr..=rr).collect();
    let table = c_table(real, &s_values, t_max + THRESHOLD_WINDOW, mode, 0)?;
    let ok = |t: usize| {
        let bound = mu.powi(t as i32 - 2);
        table.iter().all(|(f, b)| f[t] <= bound && b[t] <= bound)
    };
    for cand in 2..=t_max {
        if (cand..=cand + THRESHOLD_WINDOW).all(ok) {
            return Ok(Threshold { t: cand, mu });
        }
    }
    Err(Error::NotFoundUpTo(t_max as f64))
}

/// Re-tests the threshold inequality at the given `t` values with fresh
/// sampling streams.
pub fn threshold_holds(
    real: &mut EnvRealization,
    threshold: Threshold,
    r: f64,
    t_values: &[usize],
    mode: ContractionMode,
) -> Result<bool> {
    let t_max = t_values.iter().copied().max().unwrap_or(0);
    let rr = r.ceil() as i64;
    let s_values: Vec<i64> = (-rr..=rr).collect();
    let table = c_table(real, &s_values, t_max, mode, 1)?;
    Ok(t_values.iter().all(|&t| {
        let bound = threshold.mu.powi(t as i32 - 2);
        t < threshold.t || table.iter().all(|(f, b)| f[t] <= bound && b[t] <= bound)
    }))
}

// ---------------------------------------------------------------------------
// Rank-one limit

/// `X ↦ Tr(Z'X) · Z`.
pub fn rank_one_xi(zp: &DensityMatrix, z: &DensityMatrix) -> SuperOp {
    let d = z.dim();
    let vz = z.matrix().vec();
    let vzp_t = zp.matrix().transpose().vec();
    let m = ComplexMatrix::from_fn(d * d, |r, c| vz[r] * vzp_t[c]);
    SuperOp::from_matrix(d, m).expect("size D²")
}

/// `φ / Tr φ†(I)`.
pub fn normalized_propagator(phi: &SuperOp) -> Result<SuperOp> {
    let tr = phi.adjoint().apply(&ComplexMatrix::identity(phi.dim()))?.trace().re;
    if !(tr > 0.0) {
        return Err(Error::KernelHit(tr));
    }
    Ok(phi.scale(1.0 / tr))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RankOneMode {
    /// Sup of `‖φ̃(ρ) − Ξ(ρ)‖₁` over `n_states` sampled states.
    StateSup(usize),
    /// Induced `1 → 1` norm of `φ̃ − Ξ`.
    Norm1to1,
}

/// Horizons and probe states for the limit-state estimators.
#[derive(Debug, Clone)]
pub struct LimitConfig {
    pub horizons: Vec<f64>,
    pub probes: Vec<DensityMatrix>,
}

impl LimitConfig {
    pub fn standard(dim: usize, deepest: f64) -> Self {
        let mut horizons: Vec<f64> = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0]
            .into_iter()
            .filter(|&h| h < deepest)
            .collect();
        horizons.push(deepest);
        Self {
            horizons,
            probes: default_probes(dim, 0),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RankOneCurve {
    /// Errors against `t − s`.
    pub curve: DecayCurve,
    /// `ĉ(φ_{s,t})` per grid point.
    pub c_hat: Vec<f64>,
    /// `diam Z'_s + diam Z_t` per grid point.
    pub z_diameters: Vec<f64>,
}

pub fn rank_one_error(phi: &SuperOp, xi: &SuperOp, mode: RankOneMode, seed: u64) -> Result<f64> {
    let tilde = normalized_propagator(phi)?;
    let diff = tilde.sub(xi)?;
    let mut rng = rng_stream(seed, stream_id(&[TAG_RANKONE]));
    Ok(match mode {
        RankOneMode::StateSup(n) => {
            let mut best = 0.0f64;
            for k in 0..n.max(1) {
                let kind = if k % 2 == 0 { StateKind::HaarPure } else { StateKind::FullRankHS };
                let rho = sample_state(&mut rng, phi.dim(), kind);
                best = best.max(diff.apply(rho.matrix())?.trace_norm());
            }
            best
        }
        RankOneMode::Norm1to1 => norm_1to1(&diff, 8, &mut rng).value,
    })
}

/// Distance between `φ̃_{s,t}` and `Ξ_{s,t}` over `t_grid`.
pub fn rank_one_error_curve(
    real: &mut EnvRealization,
    s: f64,
    t_grid: &[f64],
    mode: RankOneMode,
    limits: &LimitConfig,
    c_mode: ContractionMode,
) -> Result<RankOneCurve> {
    if t_grid.is_empty() || t_grid[0] <= s || t_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument("t grid must increase and start after s".into()));
    }
    let zp = estimate_zprime(real, s, &limits.horizons, &limits.probes)?;
    let mut points = Vec::with_capacity(t_grid.len());
    let mut c_hat = Vec::with_capacity(t_grid.len());
    let mut z_diameters = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let z = estimate_z(real, t, &limits.horizons, &limits.probes)?;
        let phi = real.propagator(s, t)?;
        let xi = rank_one_xi(&zp.z, &z.z);
        let seed = real.seed() ^ t.to_bits();
        let err = rank_one_error(&phi, &xi, mode, seed)?;
        let mut rng = rng_stream(real.seed(), stream_id(&[TAG_RANKONE, 1, t.to_bits()]));
        c_hat.push(contraction_coeff(&phi, c_mode, &mut rng)?.value);
        z_diameters.push(zp.diameter + z.diameter);
        points.push(CurvePoint {
            sep: t - s,
            value: err,
            ci_low: err,
            ci_high: err,
        });
    }
    let estimator = match mode {
        RankOneMode::StateSup(n) => format!("rankone_state_sup(n_states={n})"),
        RankOneMode::Norm1to1 => "rankone_norm_1to1(restarts=8)".to_string(),
    };
    let curve = DecayCurve::new(
        points,
        CurveMeta::new(real.model().variant(), vec![real.seed()], estimator, 0.0),
    )?;
    Ok(RankOneCurve {
        curve,
        c_hat,
        z_diameters,
    })
}

// ---------------------------------------------------------------------------
// Cocycles

/// Absolute floor added to the cocycle bound for round-off.
pub const COCYCLE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct CocycleReport {
    pub residuals: Vec<f64>,
    pub bounds: Vec<f64>,
    pub max_residual: f64,
    pub pass: bool,
}

fn cocycle_report(residuals: Vec<f64>, bounds: Vec<f64>) -> CocycleReport {
    let pass = residuals.iter().zip(&bounds).all(|(r, b)| r <= b);
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    CocycleReport {
        residuals,
        bounds,
        max_residual,
        pass,
    }
}

/// `‖φ_{s,t} · Ẑ_s − Ẑ_t‖₁ ≤ 5 (diam Ẑ_s + diam Ẑ_t)` for each `s`.
pub fn cocycle_check(
    real: &mut EnvRealization,
    s_grid: &[f64],
    t: f64,
    z_s: &[RankOneLimit],
    z_t: &RankOneLimit,
) -> Result<CocycleReport> {
    if s_grid.len() != z_s.len() {
        return Err(Error::InvalidArgument("one Z estimate per s is required".into()));
    }
    let mut residuals = Vec::new();
    let mut bounds = Vec::new();
    for (&s, zs) in s_grid.iter().zip(z_s) {
        let img = real.propagator(s, t)?.projective_apply(&zs.z)?;
        residuals.push((img.matrix() - z_t.z.matrix()).trace_norm());
        bounds.push(5.0 * (zs.diameter + z_t.diameter) + COCYCLE_FLOOR);
    }
    Ok(cocycle_report(residuals, bounds))
}

/// `‖φ†_{s,t} · Ẑ'_t − Ẑ'_s‖₁ ≤ 5 (diam Ẑ'_s + diam Ẑ'_t)` for each `t`.
pub fn cocycle_check_adjoint(
    real: &mut EnvRealization,
    s: f64,
    t_grid: &[f64],
    zp_s: &RankOneLimit,
    zp_t: &[RankOneLimit],
) -> Result<CocycleReport> {
    if t_grid.len() != zp_t.len() {
        return Err(Error::InvalidArgument("one Z' estimate per t is required".into()));
    }
    let mut residuals = Vec::new();
    let mut bounds = Vec::new();
    for (&t, zt) in t_grid.iter().zip(zp_t) {
        let img = real.propagator(s, t)?.adjoint().projective_apply(&zt.z)?;
        residuals.push((img.matrix() - zp_s.z.matrix()).trace_norm());
        bounds.push(5.0 * (zp_s.diameter + zt.diameter) + COCYCLE_FLOOR);
    }
    Ok(cocycle_report(residuals, bounds))
}
