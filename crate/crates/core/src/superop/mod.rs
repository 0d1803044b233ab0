//! Linear maps on `D×D` matrices stored as `D²×D²` matrices acting on
//! column-stacked inputs, so that `vec(φ(X)) = M · vec(X)`.

mod contraction;
mod pf;
mod positivity;

pub use contraction::{contraction_coeff, norm_1to1, ContractionEstimate, ContractionMode, NormEstimate};
pub use pf::{pf_eigenmatrices, PFResult};
pub use positivity::{strict_positivity_certificate, Certificate};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matkernel::{hermitian_eig, ComplexMatrix, C64};
use crate::states::{make_state, DensityMatrix};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuperOp {
    dim: usize,
    matrix: ComplexMatrix,
}

impl SuperOp {
    pub fn from_matrix(dim: usize, matrix: ComplexMatrix) -> Result<Self> {
        if matrix.dim() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: matrix.dim(),
            });
        }
        Ok(Self { dim, matrix })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            matrix: ComplexMatrix::identity(dim * dim),
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            dim,
            matrix: ComplexMatrix::zeros(dim * dim),
        }
    }

    /// `X ↦ Σ K X K†`.
    pub fn from_kraus(kraus: &[ComplexMatrix]) -> Result<Self> {
        let dim = kraus
            .first()
            .map(ComplexMatrix::dim)
            .ok_or_else(|| Error::InvalidArgument("empty Kraus list".into()))?;
        let mut matrix = ComplexMatrix::zeros(dim * dim);
        for k in kraus {
            if k.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: k.dim(),
                });
            }
            matrix = &matrix + &k.conj().kron(k);
        }
        Ok(Self { dim, matrix })
    }

    /// `X ↦ U X U†`.
    pub fn unitary_conjugation(u: &ComplexMatrix) -> Self {
        Self::from_kraus(std::slice::from_ref(u)).expect("single Kraus operator")
    }

    /// `X ↦ (1 − p) X + p Tr(X) I / D`.
    pub fn depolarizing(dim: usize, p: f64) -> Self {
        let n = dim * dim;
        let w = p / dim as f64;
        let matrix = ComplexMatrix::from_fn(n, |r, c| {
            let diag = if r == c { 1.0 - p } else { 0.0 };
            let trace_part = if r % (dim + 1) == 0 && c % (dim + 1) == 0 {
                w
            } else {
                0.0
            };
            C64::new(diag + trace_part, 0.0)
        });
        Self { dim, matrix }
    }

    /// `X ↦ Xᵀ`.
    pub fn transpose_map(dim: usize) -> Self {
        let matrix = ComplexMatrix::from_fn(dim * dim, |r, c| {
            let (i, j) = (r % dim, r / dim);
            if c == j + i * dim {
                C64::new(1.0, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        Self { dim, matrix }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.dim(),
            });
        }
        ComplexMatrix::unvec(&self.matrix.matvec(&x.vec()), self.dim)
    }

    /// Hilbert-Schmidt adjoint.
    pub fn adjoint(&self) -> Self {
        Self {
            dim: self.dim,
            matrix: self.matrix.adjoint(),
        }
    }

    /// `self ∘ inner`: `inner` acts first.
    pub fn compose(&self, inner: &SuperOp) -> Result<Self> {
        if inner.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: inner.dim,
            });
        }
        Ok(Self {
            dim: self.dim,
            matrix: self.matrix.matmul(&inner.matrix),
        })
    }

    pub fn sub(&self, rhs: &SuperOp) -> Result<Self> {
        if rhs.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: rhs.dim,
            });
        }
        Ok(Self {
            dim: self.dim,
            matrix: &self.matrix - &rhs.matrix,
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            matrix: self.matrix.scale_real(s),
        }
    }

    /// `φ(ρ) / Tr φ(ρ)`.
    pub fn projective_apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let y = self.apply(rho.matrix())?;
        let tr = y.trace().re;
        if !(tr > Tolerances::DEFAULT.kernel) {
            return Err(Error::KernelHit(tr));
        }
        make_state(&y.scale_real(1.0 / tr))
    }

    /// Choi matrix `Σ_ij φ(E_ij) ⊗ E_ij`.
    pub fn to_choi(&self) -> ChoiMatrix {
        let d = self.dim;
        let n = d * d;
        // Entry ((a,i),(b,j)) of the Choi matrix is φ(E_ij)[a,b].
        let mut m = ComplexMatrix::zeros(n);
        for i in 0..d {
            for j in 0..d {
                let col = self.matrix_column(i + j * d);
                for a in 0..d {
                    for b in 0..d {
                        m[(a * d + i, b * d + j)] = col[a + b * d];
                    }
                }
            }
        }
        let min_eigenvalue = hermitian_eig(&m.hermitian_part())
            .expect("Hermitian part is Hermitian")
            .min();
        ChoiMatrix {
            matrix: m,
            min_eigenvalue,
        }
    }

    fn matrix_column(&self, c: usize) -> Vec<C64> {
        let n = self.matrix.dim();
        (0..n).map(|r| self.matrix[(r, c)]).collect()
    }
}

/// Choi matrix with the smallest eigenvalue of its Hermitian part.
#[derive(Debug, Clone)]
pub struct ChoiMatrix {
    pub matrix: ComplexMatrix,
    pub min_eigenvalue: f64,
}
