//! Density matrices, the order coefficient `m(A, B)` and the projective
//! distance `d(A, B)`.
//!
//! `m(A, B) = sup{λ ≥ 0 : λB ≤ A}` and
//! `d(A, B) = (1 − m(A,B) m(B,A)) / (1 + m(A,B) m(B,A))`.
//! `d` lies in `[0, 1]`, vanishes exactly on equal states and equals one
//! whenever one argument is interior and the other sits on the boundary.

use rand::Rng;

use crate::error::{Error, Result};
use crate::matkernel::{hermitian_eig, ComplexMatrix, HermitianEig, C64};
use crate::rng::{complex_gaussian_matrix, haar_vector};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    /// Full rank.
    Interior,
    /// Rank deficient.
    Boundary,
}

/// A validated positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    eig: HermitianEig,
    classification: Classification,
}

impl DensityMatrix {
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// Smallest eigenvalue `η(ρ)`.
    pub fn min_eigenvalue(&self) -> f64 {
        self.eig.min()
    }

    pub fn eigen(&self) -> &HermitianEig {
        &self.eig
    }

    pub fn classification(&self) -> Classification {
        self.classification
    }

    pub fn is_interior(&self) -> bool {
        self.classification == Classification::Interior
    }

    /// `I / D`.
    pub fn maximally_mixed(dim: usize) -> Self {
        make_state(&ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64))
            .expect("I/D is a state")
    }

    /// `|ψ⟩⟨ψ| / ⟨ψ|ψ⟩`.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let n2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if !(n2 > 0.0) || !n2.is_finite() {
            return Err(Error::NotAState("zero or non-finite state vector".into()));
        }
        make_state(&ComplexMatrix::outer(psi, psi).scale_real(1.0 / n2))
    }
}

/// Validates `a` as a density matrix.
///
/// Eigenvalues in `[−psd, 0)` are clipped to zero and the trace is
/// renormalized afterwards.
pub fn make_state(a: &ComplexMatrix) -> Result<DensityMatrix> {
    make_state_with(a, &Tolerances::DEFAULT)
}

pub fn make_state_with(a: &ComplexMatrix, tol: &Tolerances) -> Result<DensityMatrix> {
    if !a.is_finite() {
        return Err(Error::NotAState("non-finite entries".into()));
    }
    let defect = a.hermiticity_defect();
    if defect > tol.hermitian {
        return Err(Error::NotAState(format!(
            "not Hermitian (relative asymmetry {defect:.3e})"
        )));
    }
    let tr = a.trace().re;
    if (tr - 1.0).abs() > tol.trace {
        return Err(Error::NotAState(format!("trace {tr} differs from 1")));
    }
    let h = a.hermitian_part();
    let mut eig = hermitian_eig(&h).map_err(|e| Error::NotAState(e.to_string()))?;
    if eig.min() < -tol.psd {
        return Err(Error::NotAState(format!(
            "negative eigenvalue {:.3e}",
            eig.min()
        )));
    }
    let matrix = if eig.min() < 0.0 {
        let clipped: f64 = eig.eigenvalues.iter().map(|x| x.max(0.0)).sum();
        eig.eigenvalues
            .iter_mut()
            .for_each(|x| *x = x.max(0.0) / clipped);
        eig.reconstruct_with(|x| x)
    } else {
        h
    };
    let classification = if eig.min() > tol.rank_cutoff(matrix.dim()) {
        Classification::Interior
    } else {
        Classification::Boundary
    };
    Ok(DensityMatrix {
        matrix,
        eig,
        classification,
    })
}

/// `sup{λ ≥ 0 : λB ≤ A}`.
///
/// Zero when the support of `B` leaves the support of `A`; otherwise the
/// reciprocal of the largest eigenvalue of `A^{-1/2} B A^{-1/2}` on the
/// range of `A`.
pub fn m_coeff(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    let d = a.dim();
    assert_eq!(d, b.dim(), "m_coeff dimension mismatch");
    let cutoff = Tolerances::DEFAULT.rank_cutoff(d);
    let ea = a.eigen();
    let bm = b.matrix();

    let mut range = Vec::new();
    let mut outside = 0.0;
    for k in 0..d {
        let v = ea.eigenvector(k);
        let bv = bm.matvec(&v);
        let q: f64 = v.iter().zip(&bv).map(|(x, y)| (x.conj() * y).re).sum();
        if ea.eigenvalues[k] > cutoff {
            range.push((ea.eigenvalues[k], v));
        } else {
            outside += q;
        }
    }
    if outside > cutoff {
        return 0.0;
    }
    let r = range.len();
    let reduced = ComplexMatrix::from_fn(r, |i, j| {
        let (ai, vi) = &range[i];
        let (aj, vj) = &range[j];
        let bvj = bm.matvec(vj);
        let z: C64 = vi.iter().zip(&bvj).map(|(x, y)| x.conj() * y).sum();
        z / (ai * aj).sqrt()
    });
    let lmax = hermitian_eig(&reduced.hermitian_part())
        .expect("Hermitian part is Hermitian")
        .max();
    if lmax <= 0.0 {
        return 0.0;
    }
    1.0 / lmax
}

/// Projective distance `d(A, B) ∈ [0, 1]`.
///
/// When one argument is interior the value is computed from the spectrum
/// `μ` of `A^{-1/2}(B − A)A^{-1/2}` as `(μ_max − μ_min)/(2 + μ_max + μ_min)`,
/// which equals the defining formula and keeps full relative accuracy for
/// nearby states.
pub fn hilbert_d(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    assert_eq!(a.dim(), b.dim(), "hilbert_d dimension mismatch");
    let (base, other) = if a.min_eigenvalue() >= b.min_eigenvalue() {
        (a, b)
    } else {
        (b, a)
    };
    if base.is_interior() {
        if !other.is_interior() {
            // m(other, base) = 0 for singular `other`.
            return 1.0;
        }
        let inv_sqrt = base.eigen().reconstruct_with(|x| 1.0 / x.sqrt());
        let diff = other.matrix() - base.matrix();
        let x = inv_sqrt.matmul(&diff).matmul(&inv_sqrt).hermitian_part();
        let mu = hermitian_eig(&x).expect("Hermitian part is Hermitian");
        let (lo, hi) = (mu.min(), mu.max());
        let denom = 2.0 + hi + lo;
        if denom <= 0.0 {
            return 1.0;
        }
        return ((hi - lo) / denom).clamp(0.0, 1.0);
    }
    let p = m_coeff(a, b) * m_coeff(b, a);
    ((1.0 - p) / (1.0 + p)).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateKind {
    /// `|ψ⟩⟨ψ|` with `ψ` Haar-uniform.
    HaarPure,
    /// `GG† / Tr GG†` with `G` complex Ginibre.
    FullRankHS,
}

pub fn sample_state<R: Rng + ?Sized>(rng: &mut R, dim: usize, kind: StateKind) -> DensityMatrix {
    match kind {
        StateKind::HaarPure => {
            DensityMatrix::pure(&haar_vector(rng, dim)).expect("Haar vector is a unit vector")
        }
        StateKind::FullRankHS => {
            let g = complex_gaussian_matrix(rng, dim);
            let w = g.matmul(&g.adjoint());
            let tr = w.trace().re;
            make_state(&w.hermitian_part().scale_real(1.0 / tr)).expect("Wishart matrix is PSD")
        }
    }
}
