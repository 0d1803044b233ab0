//! Stationary random environments and the propagators they induce.
//!
//! A realization `ω` is a piecewise-constant generator path on the whole
//! real line, sampled lazily in both time directions from seeded streams.
//! `propagator(ω, s, t)` is the time-ordered exponential over `[s, t]` and
//! the shift `θ_h` satisfies `φ^{θ_h ω}_{s,t} = φ^ω_{s+h,t+h}` bit for bit.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Exp;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lindblad::Lindbladian;
use crate::matkernel::{matrix_exp, ComplexMatrix, C64};
use crate::rng::{complex_gaussian_matrix, gue, rng_stream, stream_id, StreamRng};
use crate::superop::{strict_positivity_certificate, Certificate, SuperOp};

const TAG_PHASE: u64 = 1;
const TAG_UNIT: u64 = 2;
const TAG_FROZEN: u64 = 3;
const TAG_MARKOV_START: u64 = 4;
const TAG_MARKOV_FWD: u64 = 5;
const TAG_MARKOV_BWD: u64 = 6;
const TAG_CERT: u64 = 7;

/// Distribution over generators.
#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorSampler {
    /// `H` from GUE with variance `hamiltonian_scale² / D`, `n_jumps`
    /// Ginibre jumps with entry variance `1 / D`, all at rate `rate_scale`.
    GueGinibre {
        n_jumps: usize,
        rate_scale: f64,
        hamiltonian_scale: f64,
    },
    /// A fixed list of generators drawn with the given weights.
    Atoms {
        generators: Vec<Lindbladian>,
        weights: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnvironmentModel {
    /// A fresh generator on every unit interval of the grid `phase + ℤ`.
    IidCollision { dim: usize, sampler: GeneratorSampler },
    /// Generators switched by a stationary continuous-time Markov chain.
    MarkovModulated {
        dim: usize,
        generators: Vec<Lindbladian>,
        q: Vec<Vec<f64>>,
        pi: Vec<f64>,
    },
    /// One generator drawn per realization and kept forever.
    FrozenDisorder { dim: usize, sampler: GeneratorSampler },
}

impl EnvironmentModel {
    pub fn dim(&self) -> usize {
        match self {
            EnvironmentModel::IidCollision { dim, .. }
            | EnvironmentModel::MarkovModulated { dim, .. }
            | EnvironmentModel::FrozenDisorder { dim, .. } => *dim,
        }
    }

    pub fn variant(&self) -> &'static str {
        match self {
            EnvironmentModel::IidCollision { .. } => "iid",
            EnvironmentModel::MarkovModulated { .. } => "markov",
            EnvironmentModel::FrozenDisorder { .. } => "frozen",
        }
    }

    /// Checks dimensions, weights and, for the Markov variant, that `π` is a
    /// stationary distribution of `Q`.
    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        if dim == 0 {
            return Err(Error::InvalidModel("dim must be positive".into()));
        }
        match self {
            EnvironmentModel::IidCollision { sampler, .. }
            | EnvironmentModel::FrozenDisorder { sampler, .. } => validate_sampler(dim, sampler),
            EnvironmentModel::MarkovModulated {
                generators, q, pi, ..
            } => {
                check_generators(dim, generators)?;
                validate_chain(q, pi).map_err(|e| match e {
                    Error::InvalidChain(m) => Error::InvalidModel(m),
                    other => other,
                })?;
                if q.len() != generators.len() {
                    return Err(Error::InvalidModel(format!(
                        "Q has {} states but {} generators are given",
                        q.len(),
                        generators.len()
                    )));
                }
                Ok(())
            }
        }
    }
}

fn check_generators(dim: usize, generators: &[Lindbladian]) -> Result<()> {
    if generators.is_empty() {
        return Err(Error::InvalidModel("no generators given".into()));
    }
    if let Some(g) = generators.iter().find(|g| g.dim() != dim) {
        return Err(Error::InvalidModel(format!(
            "generator of dimension {} in a model of dimension {dim}",
            g.dim()
        )));
    }
    Ok(())
}

fn validate_sampler(dim: usize, sampler: &GeneratorSampler) -> Result<()> {
    match sampler {
        GeneratorSampler::GueGinibre {
            rate_scale,
            hamiltonian_scale,
            ..
        } => {
            if !(*rate_scale >= 0.0) || !(*hamiltonian_scale >= 0.0) {
                return Err(Error::InvalidModel("sampler scales must be nonnegative".into()));
            }
            Ok(())
        }
        GeneratorSampler::Atoms {
            generators,
            weights,
        } => {
            check_generators(dim, generators)?;
            if weights.len() != generators.len() {
                return Err(Error::InvalidModel(format!(
                    "{} weights for {} generators",
                    weights.len(),
                    generators.len()
                )));
            }
            WeightedIndex::new(weights).map_err(|e| Error::InvalidModel(format!("weights: {e}")))?;
            Ok(())
        }
    }
}

/// Checks that `q` is a rate matrix with stationary distribution `pi`.
pub fn validate_chain(q: &[Vec<f64>], pi: &[f64]) -> Result<()> {
    let k = q.len();
    if k == 0 || q.iter().any(|row| row.len() != k) {
        return Err(Error::InvalidChain("Q must be a nonempty square matrix".into()));
    }
    let scale = q
        .iter()
        .flatten()
        .fold(1.0f64, |m, x| m.max(x.abs()));
    for (i, row) in q.iter().enumerate() {
        if row.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidChain(format!("row {i} of Q is not finite")));
        }
        if row.iter().enumerate().any(|(j, &x)| j != i && x < 0.0) {
            return Err(Error::InvalidChain(format!("row {i} of Q has a negative off-diagonal rate")));
        }
        let s: f64 = row.iter().sum();
        if s.abs() > 1e-12 * scale {
            return Err(Error::InvalidChain(format!("row {i} of Q sums to {s}, not 0")));
        }
    }
    if pi.len() != k {
        return Err(Error::InvalidChain(format!("π has length {}, expected {k}", pi.len())));
    }
    if pi.iter().any(|&p| !(p >= 0.0)) || (pi.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidChain("π must be a probability vector".into()));
    }
    for j in 0..k {
        let r: f64 = (0..k).map(|i| pi[i] * q[i][j]).sum();
        if r.abs() > 1e-12 * scale {
            return Err(Error::InvalidChain(format!(
                "π is not stationary: (πQ)_{j} = {r:.3e}"
            )));
        }
    }
    Ok(())
}

/// Stationary distribution of an irreducible rate matrix.
pub fn stationary_distribution(q: &[Vec<f64>]) -> Result<Vec<f64>> {
    let k = q.len();
    if k == 0 || q.iter().any(|row| row.len() != k) {
        return Err(Error::InvalidChain("Q must be a nonempty square matrix".into()));
    }
    // Solve Qᵀπ = 0 with the last equation replaced by Σπ = 1.
    let a = ComplexMatrix::from_fn(k, |i, j| {
        if i == k - 1 {
            C64::new(1.0, 0.0)
        } else {
            C64::new(q[j][i], 0.0)
        }
    });
    let rhs = ComplexMatrix::from_fn(k, |i, j| {
        C64::new(if i == k - 1 && j == 0 { 1.0 } else { 0.0 }, 0.0)
    });
    let sol = a
        .solve(&rhs)
        .map_err(|_| Error::InvalidChain("Q has no unique stationary distribution".into()))?;
    let pi: Vec<f64> = (0..k).map(|i| sol[(i, 0)].re.max(0.0)).collect();
    let s: f64 = pi.iter().sum();
    Ok(pi.into_iter().map(|p| p / s).collect())
}

// ---------------------------------------------------------------------------
// JSON form

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum SamplerJson {
    GueGinibre {
        n_jumps: usize,
        rate_scale: f64,
        hamiltonian_scale: f64,
    },
    Atoms { weights: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelJson {
    variant: String,
    dim: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    generators: Vec<Lindbladian>,
    #[serde(rename = "Q", default, skip_serializing_if = "Option::is_none")]
    q: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    initial: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sampler: Option<SamplerJson>,
}

impl TryFrom<ModelJson> for EnvironmentModel {
    type Error = Error;
    fn try_from(j: ModelJson) -> Result<Self> {
        let sampler = |generators: Vec<Lindbladian>, s: Option<SamplerJson>| -> Result<GeneratorSampler> {
            match s {
                Some(SamplerJson::GueGinibre {
                    n_jumps,
                    rate_scale,
                    hamiltonian_scale,
                }) => Ok(GeneratorSampler::GueGinibre {
                    n_jumps,
                    rate_scale,
                    hamiltonian_scale,
                }),
                Some(SamplerJson::Atoms { weights }) => Ok(GeneratorSampler::Atoms { generators, weights }),
                None if !generators.is_empty() => {
                    let w = vec![1.0; generators.len()];
                    Ok(GeneratorSampler::Atoms {
                        generators,
                        weights: w,
                    })
                }
                None => Err(Error::InvalidModel("a sampler or generators are required".into())),
            }
        };
        let model = match j.variant.as_str() {
            "iid" => EnvironmentModel::IidCollision {
                dim: j.dim,
                sampler: sampler(j.generators, j.sampler)?,
            },
            "frozen" => EnvironmentModel::FrozenDisorder {
                dim: j.dim,
                sampler: sampler(j.generators, j.sampler)?,
            },
            "markov" => {
                let q = j
                    .q
                    .ok_or_else(|| Error::InvalidModel("markov variant needs Q".into()))?;
                let pi = match j.initial {
                    Some(pi) => pi,
                    None => stationary_distribution(&q).map_err(|e| Error::InvalidModel(e.to_string()))?,
                };
                EnvironmentModel::MarkovModulated {
                    dim: j.dim,
                    generators: j.generators,
                    q,
                    pi,
                }
            }
            other => {
                return Err(Error::InvalidModel(format!(
                    "unknown variant '{other}' (expected iid, markov or frozen)"
                )))
            }
        };
        model.validate()?;
        Ok(model)
    }
}

impl From<&EnvironmentModel> for ModelJson {
    fn from(m: &EnvironmentModel) -> Self {
        let split = |s: &GeneratorSampler| match s {
            GeneratorSampler::GueGinibre {
                n_jumps,
                rate_scale,
                hamiltonian_scale,
            } => (
                Vec::new(),
                SamplerJson::GueGinibre {
                    n_jumps: *n_jumps,
                    rate_scale: *rate_scale,
                    hamiltonian_scale: *hamiltonian_scale,
                },
            ),
            GeneratorSampler::Atoms { generators, weights } => (
                generators.clone(),
                SamplerJson::Atoms {
                    weights: weights.clone(),
                },
            ),
        };
        match m {
            EnvironmentModel::IidCollision { dim, sampler } | EnvironmentModel::FrozenDisorder { dim, sampler } => {
                let (generators, s) = split(sampler);
                ModelJson {
                    variant: m.variant().into(),
                    dim: *dim,
                    generators,
                    q: None,
                    initial: None,
                    sampler: Some(s),
                }
            }
            EnvironmentModel::MarkovModulated {
                dim,
                generators,
                q,
                pi,
            } => ModelJson {
                variant: "markov".into(),
                dim: *dim,
                generators: generators.clone(),
                q: Some(q.clone()),
                initial: Some(pi.clone()),
                sampler: None,
            },
        }
    }
}

impl Serialize for EnvironmentModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ModelJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for EnvironmentModel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = ModelJson::deserialize(d)?;
        EnvironmentModel::try_from(raw).map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Realizations

#[derive(Debug)]
struct Generator {
    superop: SuperOp,
    unit_exp: SuperOp,
}

impl Generator {
    fn new(l: &Lindbladian) -> Result<Arc<Self>> {
        let superop = l.to_superop();
        let unit_exp = SuperOp::from_matrix(l.dim(), matrix_exp(superop.matrix())?)?;
        Ok(Arc::new(Self { superop, unit_exp }))
    }

    fn exp(&self, duration: f64) -> Result<SuperOp> {
        if duration == 1.0 {
            return Ok(self.unit_exp.clone());
        }
        SuperOp::from_matrix(
            self.superop.dim(),
            matrix_exp(&self.superop.matrix().scale_real(duration))?,
        )
    }
}

fn sample_lindbladian<R: Rng + ?Sized>(rng: &mut R, dim: usize, sampler: &GeneratorSampler, atoms: &[Arc<Generator>]) -> Result<Arc<Generator>> {
    match sampler {
        GeneratorSampler::GueGinibre {
            n_jumps,
            rate_scale,
            hamiltonian_scale,
        } => {
            let h = gue(rng, dim, *hamiltonian_scale);
            let s = 1.0 / (dim as f64).sqrt();
            let jumps: Vec<ComplexMatrix> = (0..*n_jumps)
                .map(|_| complex_gaussian_matrix(rng, dim).scale_real(s))
                .collect();
            let l = Lindbladian::new(h, jumps, vec![*rate_scale; *n_jumps])?;
            Generator::new(&l)
        }
        GeneratorSampler::Atoms { weights, .. } => {
            let w = WeightedIndex::new(weights).map_err(|e| Error::InvalidModel(e.to_string()))?;
            Ok(atoms[w.sample(rng)].clone())
        }
    }
}

#[derive(Debug, Clone)]
struct MarkovPath {
    /// `(switch time, state entered)`, increasing from `(0, X_0)`.
    fwd: Vec<(f64, usize)>,
    /// `(switch time, state occupied just after it)`, decreasing from `(0, X_0)`:
    /// the state on `(bwd[k+1].0, bwd[k].0)` is `bwd[k].1`.
    bwd: Vec<(f64, usize)>,
    fwd_rng: StreamRng,
    bwd_rng: StreamRng,
}

#[derive(Debug, Clone)]
enum Path {
    Iid(BTreeMap<i64, Arc<Generator>>),
    Frozen(Arc<Generator>),
    Markov(MarkovPath),
}

/// One disorder realization `ω`, possibly shifted.
#[derive(Debug, Clone)]
pub struct EnvRealization {
    model: Arc<EnvironmentModel>,
    atoms: Arc<Vec<Arc<Generator>>>,
    reversed_q: Arc<Vec<Vec<f64>>>,
    seed: u64,
    phase: f64,
    offset: f64,
    path: Path,
}

/// Samples the realization of `model` with master seed `seed`.
pub fn realize(model: &EnvironmentModel, seed: u64) -> Result<EnvRealization> {
    model.validate()?;
    let dim = model.dim();
    let atom_list: &[Lindbladian] = match model {
        EnvironmentModel::IidCollision {
            sampler: GeneratorSampler::Atoms { generators, .. },
            ..
        }
        | EnvironmentModel::FrozenDisorder {
            sampler: GeneratorSampler::Atoms { generators, .. },
            ..
        }
        | EnvironmentModel::MarkovModulated { generators, .. } => generators,
        _ => &[],
    };
    let atoms = atom_list.iter().map(Generator::new).collect::<Result<Vec<_>>>()?;
    let mut reversed_q = Vec::new();
    let mut phase = 0.0;
    let path = match model {
        EnvironmentModel::IidCollision { .. } => {
            phase = rng_stream(seed, stream_id(&[TAG_PHASE])).random::<f64>();
            Path::Iid(BTreeMap::new())
        }
        EnvironmentModel::FrozenDisorder { sampler, .. } => {
            let mut rng = rng_stream(seed, stream_id(&[TAG_FROZEN]));
            Path::Frozen(sample_lindbladian(&mut rng, dim, sampler, &atoms)?)
        }
        EnvironmentModel::MarkovModulated { q, pi, .. } => {
            let k = q.len();
            reversed_q = (0..k)
                .map(|i| {
                    (0..k)
                        .map(|j| if pi[i] > 0.0 { pi[j] * q[j][i] / pi[i] } else { 0.0 })
                        .collect()
                })
                .collect();
            let mut start = rng_stream(seed, stream_id(&[TAG_MARKOV_START]));
            let x0 = WeightedIndex::new(pi)
                .map_err(|e| Error::InvalidModel(e.to_string()))?
                .sample(&mut start);
            Path::Markov(MarkovPath {
                fwd: vec![(0.0, x0)],
                bwd: vec![(0.0, x0)],
                fwd_rng: rng_stream(seed, stream_id(&[TAG_MARKOV_FWD])),
                bwd_rng: rng_stream(seed, stream_id(&[TAG_MARKOV_BWD])),
            })
        }
    };
    Ok(EnvRealization {
        model: Arc::new(model.clone()),
        atoms: Arc::new(atoms),
        reversed_q: Arc::new(reversed_q),
        seed,
        phase,
        offset: 0.0,
        path,
    })
}

/// `θ_h ω`: the realization whose path at time `t` is that of `ω` at `t + h`.
pub fn shift(real: &EnvRealization, h: f64) -> EnvRealization {
    let mut out = real.clone();
    out.offset += h;
    out
}

/// One jump of a chain with rate matrix `q` out of state `i`; `None` for an
/// absorbing state.
fn jump<R: Rng + ?Sized>(rng: &mut R, q: &[Vec<f64>], i: usize) -> Option<(f64, usize)> {
    let rates: Vec<f64> = q[i]
        .iter()
        .enumerate()
        .map(|(j, &r)| if j == i { 0.0 } else { r.max(0.0) })
        .collect();
    let total: f64 = rates.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let hold = Exp::new(total).expect("positive rate").sample(rng);
    let next = WeightedIndex::new(&rates).expect("positive total").sample(rng);
    Some((hold, next))
}

impl EnvRealization {
    pub fn model(&self) -> &EnvironmentModel {
        &self.model
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    /// Grid offset of the collision model; zero for the other variants.
    pub fn phase(&self) -> f64 {
        self.phase
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    fn unit(&mut self, k: i64) -> Result<Arc<Generator>> {
        let dim = self.dim();
        let sampler = match &*self.model {
            EnvironmentModel::IidCollision { sampler, .. } => sampler.clone(),
            _ => unreachable!("unit generators exist only in the collision model"),
        };
        let Path::Iid(units) = &mut self.path else {
            unreachable!("collision model has a unit cache")
        };
        if let Some(g) = units.get(&k) {
            return Ok(g.clone());
        }
        let mut rng = rng_stream(self.seed, stream_id(&[TAG_UNIT, k as u64]));
        let g = sample_lindbladian(&mut rng, dim, &sampler, &self.atoms)?;
        units.insert(k, g.clone());
        Ok(g)
    }

    fn extend_markov(&mut self, lo: f64, hi: f64) {
        let EnvironmentModel::MarkovModulated { q, .. } = &*self.model else {
            return;
        };
        let rq = self.reversed_q.clone();
        let Path::Markov(p) = &mut self.path else {
            return;
        };
        while p.fwd.last().unwrap().0 <= hi {
            let (t, i) = *p.fwd.last().unwrap();
            match jump(&mut p.fwd_rng, q, i) {
                Some((h, j)) => p.fwd.push((t + h, j)),
                None => {
                    p.fwd.push((f64::INFINITY, i));
                    break;
                }
            }
        }
        while p.bwd.last().unwrap().0 >= lo {
            let (t, i) = *p.bwd.last().unwrap();
            match jump(&mut p.bwd_rng, &rq, i) {
                Some((h, j)) => p.bwd.push((t - h, j)),
                None => {
                    p.bwd.push((f64::NEG_INFINITY, i));
                    break;
                }
            }
        }
    }

    /// State of the modulating chain at time `t`, for the Markov variant.
    pub fn markov_state_at(&mut self, t: f64) -> Option<usize> {
        let t = t + self.offset;
        self.extend_markov(t, t);
        let Path::Markov(p) = &self.path else {
            return None;
        };
        if t >= 0.0 {
            let k = p.fwd.partition_point(|&(s, _)| s <= t);
            Some(p.fwd[k - 1].1)
        } else {
            let k = p.bwd.partition_point(|&(s, _)| s > t);
            Some(p.bwd[k - 1].1)
        }
    }

    /// Constant-generator pieces `(start, end, generator)` covering the
    /// absolute window `[a, b]`, in time order.
    fn pieces(&mut self, a: f64, b: f64) -> Result<Vec<(f64, f64, Arc<Generator>)>> {
        match &self.path {
            Path::Frozen(g) => Ok(vec![(a, b, g.clone())]),
            Path::Iid(_) => {
                let phase = self.phase;
                let first = (a - phase).floor() as i64;
                let mut out = Vec::new();
                let mut k = first;
                loop {
                    let lo = phase + k as f64;
                    let hi = phase + (k + 1) as f64;
                    let s = a.max(lo);
                    let e = b.min(hi);
                    if e > s {
                        out.push((s, e, self.unit(k)?));
                    }
                    if hi >= b {
                        break;
                    }
                    k += 1;
                }
                Ok(out)
            }
            Path::Markov(_) => {
                self.extend_markov(a, b);
                let Path::Markov(p) = &self.path else {
                    unreachable!()
                };
                // Switch times on the whole line in increasing order.
                let mut marks: Vec<(f64, usize)> = p.bwd[1..]
                    .iter()
                    .rev()
                    .map(|&(t, _)| t)
                    .zip(p.bwd.iter().rev().skip(1).map(|&(_, i)| i))
                    .collect();
                marks.extend(p.fwd.iter().copied());
                let mut out = Vec::new();
                for (idx, &(t0, state)) in marks.iter().enumerate() {
                    let t1 = marks.get(idx + 1).map_or(f64::INFINITY, |m| m.0);
                    let s = a.max(t0);
                    let e = b.min(t1);
                    if e > s {
                        out.push((s, e, self.atoms[state].clone()));
                    }
                }
                Ok(out)
            }
        }
    }

    /// `φ^ω_{s,t}`.
    pub fn propagator(&mut self, s: f64, t: f64) -> Result<SuperOp> {
        if !(s < t) {
            return Err(Error::OrderViolation { s, t });
        }
        let (a, b) = (s + self.offset, t + self.offset);
        let mut acc: Option<SuperOp> = None;
        for (lo, hi, g) in self.pieces(a, b)? {
            let step = g.exp(hi - lo)?;
            acc = Some(match acc {
                None => step,
                Some(prev) => step.compose(&prev)?,
            });
        }
        Ok(acc.expect("a nonempty window has at least one piece"))
    }

    /// Unit-step propagators `φ_{s+k, s+k+1}` for `k = 0..n`.
    pub fn unit_steps(&mut self, s: f64, n: usize) -> Result<Vec<SuperOp>> {
        (0..n)
            .map(|k| self.propagator(s + k as f64, s + k as f64 + 1.0))
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Strict-positivity times

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tau {
    Found(f64),
    NotFoundUpTo(f64),
}

impl Tau {
    pub fn is_found(&self) -> bool {
        matches!(self, Tau::Found(_))
    }
}

#[derive(Debug, Clone)]
pub struct TauEstimate {
    pub tau: Tau,
    /// Certificate of the propagator at `τ`, or at the horizon if none was found.
    pub certificate: Certificate,
    /// Every later grid point up to the horizon also certified.
    pub monotone: bool,
}

pub const DEFAULT_TAU_STEP: f64 = 0.25;
pub const DEFAULT_TAU_HORIZON: f64 = 64.0;

fn tau_search(
    real: &mut EnvRealization,
    delta: f64,
    horizon: f64,
    backward: bool,
) -> Result<TauEstimate> {
    if !(delta > 0.0) || !(horizon >= delta) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < δ ≤ horizon, got δ = {delta}, horizon = {horizon}"
        )));
    }
    let n = (horizon / delta).floor() as usize;
    let mut acc: Option<SuperOp> = None;
    let mut found: Option<(f64, SuperOp)> = None;
    let mut monotone = true;
    for k in 1..=n {
        let t = k as f64 * delta;
        let prev_t = (k - 1) as f64 * delta;
        let step = if backward {
            real.propagator(-t, -prev_t)?
        } else {
            real.propagator(prev_t, t)?
        };
        let cur = match acc {
            None => step,
            Some(a) if backward => a.compose(&step)?,
            Some(a) => step.compose(&a)?,
        };
        let strict = cur.to_choi().min_eigenvalue > crate::tolerance::Tolerances::DEFAULT.choi_strict;
        if strict && found.is_none() {
            found = Some((t, cur.clone()));
        } else if !strict && found.is_some() {
            monotone = false;
        }
        acc = Some(cur);
    }
    let mut rng = rng_stream(real.seed(), stream_id(&[TAG_CERT, backward as u64]));
    Ok(match found {
        Some((t, phi)) => TauEstimate {
            tau: Tau::Found(t),
            certificate: strict_positivity_certificate(&phi, &mut rng),
            monotone,
        },
        None => TauEstimate {
            tau: Tau::NotFoundUpTo(n as f64 * delta),
            certificate: strict_positivity_certificate(&acc.expect("n ≥ 1"), &mut rng),
            monotone: true,
        },
    })
}

/// Smallest grid time `t = kδ ≤ horizon` with `φ_{0,t}` certified strictly
/// positive.
pub fn estimate_tau_plus(real: &mut EnvRealization, delta: f64, horizon: f64) -> Result<TauEstimate> {
    tau_search(real, delta, horizon, false)
}

/// Mirror search: smallest grid `t` with `φ_{−t,0}` certified strictly positive.
pub fn estimate_tau_minus(real: &mut EnvRealization, delta: f64, horizon: f64) -> Result<TauEstimate> {
    tau_search(real, delta, horizon, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn gue_model(variant: &str) -> EnvironmentModel {
        let sampler = GeneratorSampler::GueGinibre {
            n_jumps: 2,
            rate_scale: 0.5,
            hamiltonian_scale: 1.0,
        };
        match variant {
            "iid" => EnvironmentModel::IidCollision { dim: 2, sampler },
            _ => EnvironmentModel::FrozenDisorder { dim: 2, sampler },
        }
    }

    fn markov_model() -> EnvironmentModel {
        let q = vec![vec![-1.0, 1.0], vec![2.0, -2.0]];
        EnvironmentModel::MarkovModulated {
            dim: 2,
            generators: vec![
                Lindbladian::depolarizing(2, 0.3).unwrap(),
                Lindbladian::dephasing(0.5).unwrap(),
            ],
            pi: stationary_distribution(&q).unwrap(),
            q,
        }
    }

    fn close(a: &SuperOp, b: &SuperOp, tol: f64) -> bool {
        (a.matrix() - b.matrix()).frobenius_norm() <= tol
    }

    #[test]
    fn stationary_distribution_two_state() {
        let pi = stationary_distribution(&[vec![-1.0, 1.0], vec![2.0, -2.0]]).unwrap();
        assert!((pi[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!((pi[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn chain_validation() {
        assert!(validate_chain(&[vec![-1.0, 1.0], vec![2.0, -2.0]], &[0.5, 0.5]).is_err());
        assert!(validate_chain(&[vec![-1.0, 0.5], vec![2.0, -2.0]], &[2.0 / 3.0, 1.0 / 3.0]).is_err());
        assert!(validate_chain(&[vec![1.0, -1.0], vec![-2.0, 2.0]], &[2.0 / 3.0, 1.0 / 3.0]).is_err());
    }

    #[test]
    fn order_violation() {
        let mut w = realize(&gue_model("iid"), 1).unwrap();
        assert!(matches!(w.propagator(1.0, 1.0), Err(Error::OrderViolation { .. })));
    }

    #[test]
    fn composition_law_all_variants() {
        for model in [gue_model("iid"), gue_model("frozen"), markov_model()] {
            let mut w = realize(&model, 7).unwrap();
            let (r, s, t) = (-1.3, 0.4, 2.9);
            let whole = w.propagator(r, t).unwrap();
            let split = w.propagator(s, t).unwrap().compose(&w.propagator(r, s).unwrap()).unwrap();
            assert!(close(&whole, &split, 1e-10), "{}", model.variant());
        }
    }

    #[test]
    fn shift_is_bit_exact() {
        for model in [gue_model("iid"), markov_model()] {
            let w = realize(&model, 3).unwrap();
            let h = 0.37;
            let mut shifted = shift(&w, h);
            let mut base = w.clone();
            assert_eq!(
                shifted.propagator(-0.5, 1.25).unwrap(),
                base.propagator(-0.5 + h, 1.25 + h).unwrap()
            );
            let mut twice = shift(&shift(&w, 0.25), 0.5);
            let mut once = shift(&w, 0.75);
            assert_eq!(twice.propagator(0.0, 2.0).unwrap(), once.propagator(0.0, 2.0).unwrap());
            let mut zero = shift(&w, 0.0);
            assert_eq!(zero.propagator(0.1, 0.9).unwrap(), base.propagator(0.1, 0.9).unwrap());
        }
    }

    #[test]
    fn determinism_and_two_sided_consistency() {
        let model = markov_model();
        let mut a = realize(&model, 11).unwrap();
        let mut b = realize(&model, 11).unwrap();
        let left_then_right = (a.propagator(-8.0, -7.0).unwrap(), a.propagator(7.0, 8.0).unwrap());
        let right_then_left = (b.propagator(7.0, 8.0).unwrap(), b.propagator(-8.0, -7.0).unwrap());
        assert_eq!(left_then_right.0, right_then_left.1);
        assert_eq!(left_then_right.1, right_then_left.0);

        let mut c = realize(&gue_model("iid"), 5).unwrap();
        let mut d = realize(&gue_model("iid"), 5).unwrap();
        let _ = d.propagator(10.0, 11.0).unwrap();
        assert_eq!(c.propagator(-3.0, 4.0).unwrap(), d.propagator(-3.0, 4.0).unwrap());
    }

    #[test]
    fn frozen_depends_on_length_only() {
        let mut w = realize(&gue_model("frozen"), 2).unwrap();
        let a = w.propagator(0.0, 1.5).unwrap();
        let b = w.propagator(4.0, 5.5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tau_for_depolarizing_and_unitary() {
        let dep = EnvironmentModel::IidCollision {
            dim: 2,
            sampler: GeneratorSampler::Atoms {
                generators: vec![Lindbladian::depolarizing(2, 0.8).unwrap()],
                weights: vec![1.0],
            },
        };
        let mut w = realize(&dep, 1).unwrap();
        let est = estimate_tau_plus(&mut w, 0.25, 4.0).unwrap();
        assert_eq!(est.tau, Tau::Found(0.25));
        assert!(est.certificate.is_strict() && est.monotone);

        let h = ComplexMatrix::from_real_diag(&[1.0, -1.0]);
        let unitary = EnvironmentModel::FrozenDisorder {
            dim: 2,
            sampler: GeneratorSampler::Atoms {
                generators: vec![Lindbladian::hamiltonian(h).unwrap()],
                weights: vec![1.0],
            },
        };
        let mut w = realize(&unitary, 1).unwrap();
        let est = estimate_tau_plus(&mut w, 0.25, 4.0).unwrap();
        assert_eq!(est.tau, Tau::NotFoundUpTo(4.0));
        assert!(matches!(est.certificate, Certificate::CertifiedNotStrict { .. }));
    }

    #[test]
    fn json_round_trip_and_errors() {
        let m = markov_model();
        let s = serde_json::to_string(&m).unwrap();
        let back: EnvironmentModel = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        let iid: EnvironmentModel = serde_json::from_str(
            r#"{"variant":"iid","dim":3,"sampler":{"type":"gue_ginibre","n_jumps":2,"rate_scale":0.5,"hamiltonian_scale":1.0}}"#,
        )
        .unwrap();
        assert_eq!(iid.dim(), 3);
        assert!(serde_json::from_str::<EnvironmentModel>(r#"{"variant":"weird","dim":2}"#).is_err());
        assert!(serde_json::from_str::<EnvironmentModel>(r#"{"variant":"iid","dim":2,"bogus":1}"#).is_err());
    }
}
