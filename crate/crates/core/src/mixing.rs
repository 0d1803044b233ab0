//! Mixing coefficients and their consequences.
//!
//! The ρ, ψ and φ coefficients of the propagator process itself are suprema
//! over infinite σ-algebras. This module provides what can be computed:
//! exact coefficients of finite joint distributions, the exact one-step
//! φ-mixing curve of a finite modulating chain, and sampled correlations,
//! which are lower bounds on ρ.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{
    contraction_series, estimate_z, estimate_zprime, rank_one_error, rank_one_xi, CurveMeta,
    CurvePoint, DecayCurve, LimitConfig, RankOneMode,
};
use crate::environment::{realize, stationary_distribution, validate_chain, EnvironmentModel};
use crate::error::{Error, Result};
use crate::matkernel::{matrix_exp, singular_values, ComplexMatrix, C64};
use crate::rng::{haar_vector, rng_stream, stream_id};
use crate::states::DensityMatrix;
use crate::stats::{bootstrap_indices, bootstrap_mean, correlation, fit_line, mean, LineFit};
use crate::superop::{contraction_coeff, ContractionMode, SuperOp};

const TAG_PROXY: u64 = 30;
const TAG_HIGHPROB: u64 = 31;

/// Largest support size handled by exhaustive event enumeration.
pub const MAX_SUPPORT: usize = 12;

/// Joint law of two finite random variables `X ∈ {0..a}`, `Y ∈ {0..b}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteJointPMF {
    table: Vec<Vec<f64>>,
}

impl FiniteJointPMF {
    pub fn new(table: Vec<Vec<f64>>) -> Result<Self> {
        let a = table.len();
        let b = table.first().map_or(0, Vec::len);
        if a == 0 || b == 0 || table.iter().any(|r| r.len() != b) {
            return Err(Error::InvalidArgument("pmf table must be a nonempty rectangle".into()));
        }
        if table.iter().flatten().any(|&p| !(p >= 0.0)) {
            return Err(Error::InvalidArgument("pmf entries must be nonnegative".into()));
        }
        let s: f64 = table.iter().flatten().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!("pmf sums to {s}, not 1")));
        }
        Ok(Self { table })
    }

    /// Product of two marginals.
    pub fn product(px: &[f64], py: &[f64]) -> Result<Self> {
        Self::new(px.iter().map(|&x| py.iter().map(|&y| x * y).collect()).collect())
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.table.len(), self.table[0].len())
    }

    pub fn table(&self) -> &[Vec<f64>] {
        &self.table
    }

    pub fn marginal_x(&self) -> Vec<f64> {
        self.table.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn marginal_y(&self) -> Vec<f64> {
        let b = self.shape().1;
        (0..b).map(|j| self.table.iter().map(|r| r[j]).sum()).collect()
    }

    pub fn transpose(&self) -> Self {
        let (a, b) = self.shape();
        Self {
            table: (0..b).map(|j| (0..a).map(|i| self.table[i][j]).collect()).collect(),
        }
    }

    fn check_enumerable(&self) -> Result<()> {
        let (a, b) = self.shape();
        if a > MAX_SUPPORT || b > MAX_SUPPORT {
            return Err(Error::TooLarge(a.max(b)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingCoefficients {
    /// Maximal correlation.
    pub rho: f64,
    /// `sup |1 − P(A∩B) / (P(A)P(B))|`.
    pub psi: f64,
    /// `sup |P(B|A) − P(B)|` with `A` an `X`-event.
    pub phi_fwd: f64,
    /// `sup |P(A|B) − P(A)|` with `B` a `Y`-event.
    pub phi_bwd: f64,
}

/// Sums of `w` over every subset of indices, indexed by bitmask.
fn subset_sums(w: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; 1 << w.len()];
    for mask in 1usize..out.len() {
        let low = mask.trailing_zeros() as usize;
        out[mask] = out[mask & (mask - 1)] + w[low];
    }
    out
}

/// Exact coefficients by enumeration of all `2^a × 2^b` event pairs, with
/// ρ from the second singular value of `p_ij / √(p_i q_j)`.
pub fn mixing_coeffs_finite(p: &FiniteJointPMF) -> Result<MixingCoefficients> {
    p.check_enumerable()?;
    let (a, b) = p.shape();
    let px = p.marginal_x();
    let py = p.marginal_y();
    let pa = subset_sums(&px);
    let pb = subset_sums(&py);

    let mut psi = 0.0f64;
    let mut phi_fwd = 0.0f64;
    let mut phi_bwd = 0.0f64;
    let mut row = vec![0.0; b];
    for amask in 1usize..1 << a {
        for (j, r) in row.iter_mut().enumerate() {
            *r = (0..a).filter(|i| amask >> i & 1 == 1).map(|i| p.table[i][j]).sum();
        }
        let joint = subset_sums(&row);
        for bmask in 1usize..1 << b {
            let (pa, pb, pab) = (pa[amask], pb[bmask], joint[bmask]);
            if pa > 0.0 && pb > 0.0 {
                psi = psi.max((1.0 - pab / (pa * pb)).abs());
            }
            if pa > 0.0 {
                phi_fwd = phi_fwd.max((pab / pa - pb).abs());
            }
            if pb > 0.0 {
                phi_bwd = phi_bwd.max((pab / pb - pa).abs());
            }
        }
    }

    let n = a.max(b);
    let q = ComplexMatrix::from_fn(n, |i, j| {
        if i < a && j < b && px[i] > 0.0 && py[j] > 0.0 {
            C64::new(p.table[i][j] / (px[i] * py[j]).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let sv = singular_values(&q);
    let rho = sv.get(1).copied().unwrap_or(0.0).clamp(0.0, 1.0);
    Ok(MixingCoefficients {
        rho,
        psi,
        phi_fwd,
        phi_bwd,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceReport {
    pub cov: f64,
    /// `ρ ‖X‖₂ ‖Y‖₂`.
    pub rho_bound: f64,
    /// `ψ ‖X‖₁ ‖Y‖₁`.
    pub psi_bound: f64,
    /// `2 φ ‖X‖₁ ‖Y‖_∞`.
    pub phi_bound: f64,
    pub holds: [bool; 3],
}

/// Checks the three covariance inequalities for `X = f(x)`, `Y = g(y)`.
pub fn covariance_bound_check(p: &FiniteJointPMF, f: &[f64], g: &[f64], tol: f64) -> Result<CovarianceReport> {
    let (a, b) = p.shape();
    if f.len() != a || g.len() != b {
        return Err(Error::DimensionMismatch {
            expected: a * b,
            got: f.len() * g.len(),
        });
    }
    let coeffs = mixing_coeffs_finite(p)?;
    let px = p.marginal_x();
    let py = p.marginal_y();
    let e = |w: &[f64], v: &[f64], k: fn(f64) -> f64| w.iter().zip(v).map(|(w, v)| w * k(*v)).sum::<f64>();
    let ef = e(&px, f, |x| x);
    let eg = e(&py, g, |x| x);
    let efg: f64 = (0..a)
        .flat_map(|i| (0..b).map(move |j| (i, j)))
        .map(|(i, j)| p.table[i][j] * f[i] * g[j])
        .sum();
    let cov = efg - ef * eg;
    let l2 = |w: &[f64], v: &[f64]| e(w, v, |x| x * x).sqrt();
    let l1 = |w: &[f64], v: &[f64]| e(w, v, f64::abs);
    let sup_g = py
        .iter()
        .zip(g)
        .filter(|(w, _)| **w > 0.0)
        .fold(0.0f64, |m, (_, v)| m.max(v.abs()));
    let rho_bound = coeffs.rho * l2(&px, f) * l2(&py, g);
    let psi_bound = coeffs.psi * l1(&px, f) * l1(&py, g);
    let phi_bound = 2.0 * coeffs.phi_fwd * l1(&px, f) * sup_g;
    let c = cov.abs();
    Ok(CovarianceReport {
        cov,
        rho_bound,
        psi_bound,
        phi_bound,
        holds: [c <= rho_bound + tol, c <= psi_bound + tol, c <= phi_bound + tol],
    })
}

// ---------------------------------------------------------------------------
// Expectation decay

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitFamily {
    /// `ln m = ln C − δ n`.
    Exponential,
    /// `ln m = ln C − p ln n`.
    PowerLaw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub family: FitFamily,
    /// Slope of the log-linear fit: `−δ` or `−p`.
    pub rate: f64,
    pub log_prefactor: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixingPoint {
    pub n: usize,
    pub mean_c: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub std_err: f64,
    pub n_samples: usize,
}

#[derive(Debug, Clone)]
pub struct MixingCurve {
    pub points: Vec<MixingPoint>,
    /// `None` when fewer than two means are positive.
    pub exponential: Option<DecayFit>,
    pub power_law: Option<DecayFit>,
    /// `ĉ(φ_{0,n})` per seed, aligned with the points.
    pub samples: Vec<Vec<f64>>,
}

impl MixingCurve {
    pub fn to_decay_curve(&self, meta: CurveMeta) -> Result<DecayCurve> {
        DecayCurve::new(
            self.points
                .iter()
                .map(|p| CurvePoint {
                    sep: p.n as f64,
                    value: p.mean_c,
                    ci_low: p.ci_low,
                    ci_high: p.ci_high,
                })
                .collect(),
            meta,
        )
    }

    pub fn mean_at(&self, n: usize) -> Option<&MixingPoint> {
        self.points.iter().find(|p| p.n == n)
    }

    /// Pairs `(n, m)` of grid points with `n + m` on the grid where
    /// `Ê[ĉ_{0,n+m}] ≤ Ê[ĉ_{0,n}] Ê[ĉ_{0,m}]` fails even after moving
    /// every mean to the favourable end of its confidence interval.
    pub fn submultiplicativity_violations(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for p in &self.points {
            for q in &self.points {
                if q.n < p.n {
                    continue;
                }
                if let Some(s) = self.mean_at(p.n + q.n) {
                    if s.ci_low > p.ci_high * q.ci_high {
                        out.push((p.n, q.n));
                    }
                }
            }
        }
        out
    }
}

fn log_fit(family: FitFamily, pts: &[MixingPoint]) -> Option<DecayFit> {
    let (x, y): (Vec<f64>, Vec<f64>) = pts
        .iter()
        .filter(|p| p.mean_c > 0.0)
        .map(|p| {
            let n = p.n as f64;
            let x = match family {
                FitFamily::Exponential => n,
                FitFamily::PowerLaw => n.ln(),
            };
            (x, p.mean_c.ln())
        })
        .unzip();
    let LineFit { slope, intercept, r2 } = fit_line(&x, &y)?;
    Some(DecayFit {
        family,
        rate: slope,
        log_prefactor: intercept,
        r2,
    })
}

/// Monte Carlo mean of `ĉ(φ_{0,n})` over seeds with bootstrap intervals and
/// both log-linear fits.
pub fn expectation_decay_curve(
    model: &EnvironmentModel,
    n_grid: &[usize],
    seeds: &[u64],
    mode: ContractionMode,
) -> Result<MixingCurve> {
    if seeds.len() < 100 {
        return Err(Error::InvalidArgument("expectation curves need at least 100 seeds".into()));
    }
    if n_grid.is_empty() || n_grid[0] == 0 || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("n grid must be positive and increasing".into()));
    }
    let samples = seeds
        .par_iter()
        .map(|&seed| contraction_series(&mut realize(model, seed)?, n_grid, mode))
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<MixingPoint> = n_grid
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let col: Vec<f64> = samples.iter().map(|s| s[k]).collect();
            let b = bootstrap_mean(&col, n as u64);
            MixingPoint {
                n,
                mean_c: b.estimate,
                ci_low: b.ci_low,
                ci_high: b.ci_high,
                std_err: b.std_err,
                n_samples: col.len(),
            }
        })
        .collect();
    Ok(MixingCurve {
        exponential: log_fit(FitFamily::Exponential, &points),
        power_law: log_fit(FitFamily::PowerLaw, &points),
        points,
        samples,
    })
}

// ---------------------------------------------------------------------------
// Modulating chain

/// `max_i ‖Pⁿ(i,·) − π‖_TV` for the unit-time transition matrix `P = e^Q`.
///
/// `pi` defaults to the stationary distribution of `q`; reducible chains
/// must supply one.
pub fn modulating_chain_phi_mixing(q: &[Vec<f64>], pi: Option<&[f64]>, n_grid: &[usize]) -> Result<Vec<(usize, f64)>> {
    let pi = match pi {
        Some(p) => p.to_vec(),
        None => stationary_distribution(q)?,
    };
    validate_chain(q, &pi)?;
    if n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("n grid must be increasing".into()));
    }
    let k = q.len();
    let gen = ComplexMatrix::from_fn(k, |i, j| C64::new(q[i][j], 0.0));
    let p = matrix_exp(&gen)?;
    let tv = |m: &ComplexMatrix| {
        (0..k)
            .map(|i| 0.5 * (0..k).map(|j| (m[(i, j)].re - pi[j]).abs()).sum::<f64>())
            .fold(0.0f64, f64::max)
    };
    let mut pn = ComplexMatrix::identity(k);
    let mut power = 0;
    let mut out = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        while power < n {
            pn = pn.matmul(&p);
            power += 1;
        }
        out.push((n, tv(&pn)));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Correlation proxy

/// Real functional of a unit propagator.
pub type Functional = dyn Fn(&SuperOp) -> f64 + Sync;

/// `ĉ` of a map, sampled from a fixed stream so that it is a function of the
/// map alone.
pub fn contraction_functional(phi: &SuperOp) -> f64 {
    let mut rng = rng_stream(0, stream_id(&[TAG_PROXY]));
    let mode = ContractionMode::Sampled { n_pairs: 8, n_ascent: 30 };
    contraction_coeff(phi, mode, &mut rng).map_or(f64::NAN, |e| e.value)
}

#[derive(Debug, Clone)]
pub struct CorrelationProxy {
    /// `|corr(f(φ_{0,1}), g(φ_{n,n+1}))|` against `n`. A lower bound on `ρ_n`.
    pub curve: DecayCurve,
    /// Grid points where a variance vanished; their correlation is reported as 0.
    pub degenerate: Vec<usize>,
}

/// Sampled correlation between `f` of the first unit propagator and `g` of
/// the unit propagator at offset `n`, across seeds.
pub fn correlation_proxy(
    model: &EnvironmentModel,
    n_grid: &[usize],
    seeds: &[u64],
    f: &Functional,
    g: &Functional,
) -> Result<CorrelationProxy> {
    if seeds.len() < 3 || n_grid.is_empty() || n_grid[0] == 0 || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("need ≥ 3 seeds and a positive increasing grid".into()));
    }
    let rows = seeds
        .par_iter()
        .map(|&seed| {
            let mut real = realize(model, seed)?;
            let x = f(&real.propagator(0.0, 1.0)?);
            let ys = n_grid
                .iter()
                .map(|&n| Ok(g(&real.propagator(n as f64, n as f64 + 1.0)?)))
                .collect::<Result<Vec<_>>>()?;
            Ok((x, ys))
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let mut points = Vec::with_capacity(n_grid.len());
    let mut degenerate = Vec::new();
    for (k, &n) in n_grid.iter().enumerate() {
        let ys: Vec<f64> = rows.iter().map(|r| r.1[k]).collect();
        let corr = match correlation(&xs, &ys) {
            Some(c) => c.abs(),
            None => {
                degenerate.push(n);
                0.0
            }
        };
        let b = bootstrap_indices(xs.len(), TAG_PROXY ^ (n as u64) << 8, |idx| {
            let x: Vec<f64> = idx.iter().map(|&i| xs[i]).collect();
            let y: Vec<f64> = idx.iter().map(|&i| ys[i]).collect();
            correlation(&x, &y).map_or(0.0, f64::abs)
        });
        points.push(CurvePoint {
            sep: n as f64,
            value: corr,
            ci_low: b.ci_low.min(corr),
            ci_high: b.ci_high.max(corr),
        });
    }
    let curve = DecayCurve::new(
        points,
        CurveMeta::new(model.variant(), seeds.to_vec(), "correlation_proxy(lower_bound)", 0.0),
    )?;
    Ok(CorrelationProxy { curve, degenerate })
}

// ---------------------------------------------------------------------------
// Deviation probabilities

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviationKind {
    /// `‖φ̃_{s,t} − Ξ̂_{s,t}‖_{1→1} > a`, Markov bound `Ê[8ĉ] / a`.
    RankOne,
    /// `‖φ_{s,t}·δ − Ẑ_t‖₁ > a`, Markov bound `Ê[4ĉ] / a`.
    State,
}

impl DeviationKind {
    pub fn factor(self) -> f64 {
        match self {
            DeviationKind::RankOne => 8.0,
            DeviationKind::State => 4.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationRow {
    pub kind: DeviationKind,
    pub s: f64,
    pub t: f64,
    pub a: f64,
    pub frequency: f64,
    pub bound: f64,
    /// Bootstrap standard error of `frequency − bound`.
    pub std_err: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeviationReport {
    pub rows: Vec<DeviationRow>,
    pub pass: bool,
}

struct SeedDeviations {
    c_hat: f64,
    rank_one: f64,
    state: f64,
}

/// Empirical deviation frequencies against the Markov bound built from the
/// measured `Ê[ĉ(φ_{s,t})]`.
pub fn highprob_check(
    model: &EnvironmentModel,
    pairs: &[(f64, f64)],
    a_schedule: &[f64],
    seeds: &[u64],
    limits: &LimitConfig,
    mode: ContractionMode,
) -> Result<DeviationReport> {
    if pairs.iter().any(|&(s, t)| !(t - s > 1.0)) {
        return Err(Error::InvalidArgument("every pair needs t − s > 1".into()));
    }
    if a_schedule.iter().any(|&a| !(a > 0.0)) || seeds.len() < 2 {
        return Err(Error::InvalidArgument("need positive thresholds and ≥ 2 seeds".into()));
    }
    let dim = model.dim();
    let mut rows = Vec::new();
    for &(s, t) in pairs {
        let per_seed = seeds
            .par_iter()
            .map(|&seed| {
                let mut real = realize(model, seed)?;
                let phi = real.propagator(s, t)?;
                let z = estimate_z(&mut real, t, &limits.horizons, &limits.probes)?;
                let zp = estimate_zprime(&mut real, s, &limits.horizons, &limits.probes)?;
                let tag = [TAG_HIGHPROB, s.to_bits(), t.to_bits()];
                let rank_one = rank_one_error(&phi, &rank_one_xi(&zp.z, &z.z), RankOneMode::Norm1to1, seed ^ t.to_bits())?;
                let mut rng = rng_stream(seed, stream_id(&tag));
                let delta = DensityMatrix::pure(&haar_vector(&mut rng, dim))?;
                let state = (phi.projective_apply(&delta)?.matrix() - z.z.matrix()).trace_norm();
                let c_hat = contraction_coeff(&phi, mode, &mut rng)?.value;
                Ok(SeedDeviations { c_hat, rank_one, state })
            })
            .collect::<Result<Vec<_>>>()?;
        for kind in [DeviationKind::RankOne, DeviationKind::State] {
            let err: Vec<f64> = per_seed
                .iter()
                .map(|d| match kind {
                    DeviationKind::RankOne => d.rank_one,
                    DeviationKind::State => d.state,
                })
                .collect();
            let kc: Vec<f64> = per_seed.iter().map(|d| kind.factor() * d.c_hat).collect();
            for &a in a_schedule {
                let excess = |idx: &[usize]| {
                    let freq = idx.iter().filter(|&&i| err[i] > a).count() as f64 / idx.len() as f64;
                    let bound = idx.iter().map(|&i| kc[i]).sum::<f64>() / idx.len() as f64 / a;
                    freq - bound
                };
                let stream = stream_id(&[TAG_HIGHPROB, kind as u64, s.to_bits(), t.to_bits(), a.to_bits()]);
                let b = bootstrap_indices(err.len(), stream, excess);
                let frequency = err.iter().filter(|&&e| e > a).count() as f64 / err.len() as f64;
                let bound = mean(&kc) / a;
                rows.push(DeviationRow {
                    kind,
                    s,
                    t,
                    a,
                    frequency,
                    bound,
                    std_err: b.std_err,
                    pass: frequency <= bound + 3.0 * b.std_err,
                });
            }
        }
    }
    let pass = rows.iter().all(|r| r.pass);
    Ok(DeviationReport { rows, pass })
}
