//! GKLS generators and time-ordered propagators for piecewise-constant
//! generator trajectories.
//!
//! The generator acts as
//! `ℒρ = −i[H, ρ] + Σ_j ξ_j (V_j ρ V_j† − ½{V_j†V_j, ρ})`.
//! For a piecewise-constant trajectory the time-ordered exponential is the
//! ordered product of segment exponentials, so no ODE integration happens.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matkernel::{matrix_exp, ComplexMatrix, C64};
use crate::superop::SuperOp;
use crate::tolerance::Tolerances;

/// GKLS generator data with `ħ = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LindbladianJson", into = "LindbladianJson")]
pub struct Lindbladian {
    h: ComplexMatrix,
    jumps: Vec<ComplexMatrix>,
    rates: Vec<f64>,
}

impl Lindbladian {
    pub fn new(h: ComplexMatrix, jumps: Vec<ComplexMatrix>, rates: Vec<f64>) -> Result<Self> {
        let d = h.dim();
        let defect = h.hermiticity_defect();
        if defect > Tolerances::DEFAULT.hermitian {
            return Err(Error::InvalidLindbladian(format!(
                "H is not Hermitian (relative asymmetry {defect:.3e})"
            )));
        }
        if jumps.len() != rates.len() {
            return Err(Error::InvalidLindbladian(format!(
                "{} jump operators but {} rates",
                jumps.len(),
                rates.len()
            )));
        }
        if let Some(v) = jumps.iter().find(|v| v.dim() != d) {
            return Err(Error::InvalidLindbladian(format!(
                "jump operator of dimension {} with H of dimension {d}",
                v.dim()
            )));
        }
        if let Some(r) = rates.iter().find(|r| !(**r >= 0.0) || !r.is_finite()) {
            return Err(Error::InvalidLindbladian(format!("rate {r} is not a finite nonnegative number")));
        }
        Ok(Self {
            h: h.hermitian_part(),
            jumps,
            rates,
        })
    }

    pub fn hamiltonian(h: ComplexMatrix) -> Result<Self> {
        Self::new(h, Vec::new(), Vec::new())
    }

    pub fn zero(dim: usize) -> Self {
        Self::hamiltonian(ComplexMatrix::zeros(dim)).expect("zero is Hermitian")
    }

    /// `ℒρ = γ (Tr(ρ) I/D − ρ)`, realized with the matrix units as jumps at
    /// rate `γ / D`.
    pub fn depolarizing(dim: usize, gamma: f64) -> Result<Self> {
        let mut jumps = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                jumps.push(ComplexMatrix::unit(dim, i, j));
            }
        }
        let rates = vec![gamma / dim as f64; dim * dim];
        Self::new(ComplexMatrix::zeros(dim), jumps, rates)
    }

    /// Qubit dephasing with jump `σ_z` at rate `γ`.
    pub fn dephasing(gamma: f64) -> Result<Self> {
        Self::new(
            ComplexMatrix::zeros(2),
            vec![ComplexMatrix::from_real_diag(&[1.0, -1.0])],
            vec![gamma],
        )
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    pub fn h(&self) -> &ComplexMatrix {
        &self.h
    }

    pub fn jumps(&self) -> &[ComplexMatrix] {
        &self.jumps
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// The generator as a `D²×D²` matrix under column stacking:
    /// `−i(I⊗H − Hᵀ⊗I) + Σ ξ (V̄⊗V − ½ I⊗V†V − ½ (V†V)ᵀ⊗I)`.
    pub fn to_superop(&self) -> SuperOp {
        let d = self.dim();
        let id = ComplexMatrix::identity(d);
        let minus_i = C64::new(0.0, -1.0);
        let mut m = (&id.kron(&self.h) - &self.h.transpose().kron(&id)).scale(minus_i);
        for (v, &rate) in self.jumps.iter().zip(&self.rates) {
            if rate == 0.0 {
                continue;
            }
            let vdv = v.adjoint().matmul(v);
            let term = &(&v.conj().kron(v) - &id.kron(&vdv).scale_real(0.5))
                - &vdv.transpose().kron(&id).scale_real(0.5);
            m = &m + &term.scale_real(rate);
        }
        SuperOp::from_matrix(d, m).expect("generator has size D²")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LindbladianJson {
    dim: usize,
    #[serde(rename = "H")]
    h: Vec<[f64; 2]>,
    #[serde(default)]
    jumps: Vec<Vec<[f64; 2]>>,
    #[serde(default)]
    rates: Vec<f64>,
}

fn matrix_from_pairs(dim: usize, pairs: &[[f64; 2]], what: &str) -> Result<ComplexMatrix> {
    if pairs.len() != dim * dim {
        return Err(Error::InvalidLindbladian(format!(
            "{what} has {} entries, expected {}",
            pairs.len(),
            dim * dim
        )));
    }
    ComplexMatrix::from_row_major(dim, pairs.iter().map(|p| C64::new(p[0], p[1])).collect())
        .map_err(|e| Error::InvalidLindbladian(format!("{what}: {e}")))
}

impl TryFrom<LindbladianJson> for Lindbladian {
    type Error = Error;
    fn try_from(j: LindbladianJson) -> Result<Self> {
        if j.dim == 0 {
            return Err(Error::InvalidLindbladian("dim must be positive".into()));
        }
        let h = matrix_from_pairs(j.dim, &j.h, "H")?;
        let jumps = j
            .jumps
            .iter()
            .enumerate()
            .map(|(k, v)| matrix_from_pairs(j.dim, v, &format!("jumps[{k}]")))
            .collect::<Result<Vec<_>>>()?;
        Lindbladian::new(h, jumps, j.rates)
    }
}

impl From<Lindbladian> for LindbladianJson {
    fn from(l: Lindbladian) -> Self {
        let pairs = |m: &ComplexMatrix| m.entries().iter().map(|z| [z.re, z.im]).collect();
        LindbladianJson {
            dim: l.dim(),
            h: pairs(&l.h),
            jumps: l.jumps.iter().map(pairs).collect(),
            rates: l.rates,
        }
    }
}

/// One constant-generator piece of a trajectory.
#[derive(Debug, Clone)]
pub struct Segment {
    pub generator: SuperOp,
    pub duration: f64,
}

impl Segment {
    pub fn new(generator: SuperOp, duration: f64) -> Result<Self> {
        if !(duration > 0.0) || !duration.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "segment duration {duration} must be positive"
            )));
        }
        Ok(Self { generator, duration })
    }

    pub fn propagator(&self) -> Result<SuperOp> {
        let m = matrix_exp(&self.generator.matrix().scale_real(self.duration))?;
        SuperOp::from_matrix(self.generator.dim(), m)
    }
}

/// `exp(ℒ_k Δ_k) ⋯ exp(ℒ_1 Δ_1)`: later segments act after earlier ones.
pub fn propagate(segments: &[Segment]) -> Result<SuperOp> {
    let first = segments
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty segment list".into()))?;
    let mut acc = first.propagator()?;
    for seg in &segments[1..] {
        acc = seg.propagator()?.compose(&acc)?;
    }
    Ok(acc)
}

/// Complete positivity and trace preservation diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CptpReport {
    /// `‖φ†(I) − I‖₁`.
    pub trace_preserving_defect: f64,
    /// Smallest eigenvalue of the Choi matrix.
    pub choi_min_eig: f64,
}

pub fn check_cptp(phi: &SuperOp) -> CptpReport {
    let id = ComplexMatrix::identity(phi.dim());
    let back = phi.adjoint().apply(&id).expect("dimension matches");
    CptpReport {
        trace_preserving_defect: (&back - &id).trace_norm(),
        choi_min_eig: phi.to_choi().min_eigenvalue,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_gaussian_matrix, gue, rng_stream};

    fn close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
        (a - b).frobenius_norm() <= tol
    }

    fn random_lindbladian(seed: u64, d: usize) -> Lindbladian {
        let mut rng = rng_stream(seed, 0);
        let h = gue(&mut rng, d, 1.0);
        let jumps = (0..2).map(|_| complex_gaussian_matrix(&mut rng, d)).collect();
        Lindbladian::new(h, jumps, vec![0.4, 0.7]).unwrap()
    }

    #[test]
    fn zero_generator() {
        assert_eq!(Lindbladian::zero(3).to_superop(), SuperOp::zero(3));
        let seg = Segment::new(SuperOp::zero(2), 1.5).unwrap();
        assert_eq!(propagate(&[seg]).unwrap(), SuperOp::identity(2));
    }

    #[test]
    fn hamiltonian_flow_is_unitary_conjugation() {
        let mut rng = rng_stream(1, 0);
        let h = gue(&mut rng, 3, 1.0);
        let t = 0.8;
        let l = Lindbladian::hamiltonian(h.clone()).unwrap();
        let phi = propagate(&[Segment::new(l.to_superop(), t).unwrap()]).unwrap();
        let u = matrix_exp(&h.scale(C64::new(0.0, -t))).unwrap();
        let direct = SuperOp::unitary_conjugation(&u);
        assert!(close(phi.matrix(), direct.matrix(), 1e-10));
    }

    #[test]
    fn dephasing_on_matrix_units() {
        let gamma = 0.3;
        let l = Lindbladian::dephasing(gamma).unwrap().to_superop();
        for (i, j) in [(0, 0), (1, 1), (0, 1), (1, 0)] {
            let e = ComplexMatrix::unit(2, i, j);
            let factor = if i == j { 0.0 } else { -2.0 * gamma };
            assert!(close(&l.apply(&e).unwrap(), &e.scale_real(factor), 1e-15));
        }
        let phi = propagate(&[Segment::new(l, 2.0).unwrap()]).unwrap();
        let out = phi.apply(&ComplexMatrix::unit(2, 0, 1)).unwrap();
        assert!((out[(0, 1)].re - (-1.2f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn depolarizing_generator_action() {
        let l = Lindbladian::depolarizing(3, 0.5).unwrap().to_superop();
        let x = complex_gaussian_matrix(&mut rng_stream(2, 0), 3);
        let expect = &ComplexMatrix::identity(3).scale(x.trace() * (0.5 / 3.0)) - &x.scale_real(0.5);
        assert!(close(&l.apply(&x).unwrap(), &expect, 1e-14));
    }

    #[test]
    fn split_and_composition() {
        let l = random_lindbladian(3, 3).to_superop();
        let whole = propagate(&[Segment::new(l.clone(), 2.0).unwrap()]).unwrap();
        let halves = propagate(&[
            Segment::new(l.clone(), 1.0).unwrap(),
            Segment::new(l.clone(), 1.0).unwrap(),
        ])
        .unwrap();
        assert!(close(whole.matrix(), halves.matrix(), 1e-11));

        let l2 = random_lindbladian(4, 3).to_superop();
        let a = Segment::new(l, 0.7).unwrap();
        let b = Segment::new(l2, 1.1).unwrap();
        let both = propagate(&[a.clone(), b.clone()]).unwrap();
        let manual = b.propagator().unwrap().compose(&a.propagator().unwrap()).unwrap();
        assert!(close(both.matrix(), manual.matrix(), 1e-12));
    }

    #[test]
    fn cptp_report() {
        let id = check_cptp(&SuperOp::identity(2));
        assert_eq!(id.trace_preserving_defect, 0.0);
        assert!(id.choi_min_eig.abs() < 1e-14);
        assert!((check_cptp(&SuperOp::identity(2).scale(0.5)).trace_preserving_defect - 1.0).abs() < 1e-14);
        let phi = propagate(&[Segment::new(random_lindbladian(5, 3).to_superop(), 1.3).unwrap()]).unwrap();
        let r = check_cptp(&phi);
        assert!(r.trace_preserving_defect <= 1e-8);
        assert!(r.choi_min_eig >= -1e-8);
    }

    #[test]
    fn validation_errors() {
        let bad_h = ComplexMatrix::unit(2, 0, 1);
        assert!(matches!(Lindbladian::hamiltonian(bad_h), Err(Error::InvalidLindbladian(_))));
        let z = ComplexMatrix::zeros(2);
        assert!(Lindbladian::new(z.clone(), vec![z.clone()], vec![-1.0]).is_err());
        assert!(Lindbladian::new(z.clone(), vec![z.clone()], vec![]).is_err());
        assert!(Segment::new(SuperOp::zero(2), 0.0).is_err());
        assert!(propagate(&[]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let l = random_lindbladian(6, 2);
        let s = serde_json::to_string(&l).unwrap();
        let back: Lindbladian = serde_json::from_str(&s).unwrap();
        assert_eq!(back, l);
        let err = serde_json::from_str::<Lindbladian>(r#"{"dim":2,"H":[[0,0]]}"#);
        assert!(err.is_err());
    }
}
