//! Dense complex matrix kernels for small square matrices.
//!
//! Everything in this crate works with `D x D` states and `D^2 x D^2`
//! super-operators where `D` is at most a handful, so a plain row-major
//! `Vec` with naive loops is both the simplest and the fastest option.
//!
//! Vectorization stacks columns: `vec(A X B) = (B^T ⊗ A) vec(X)`.

mod eig;
mod expm;

pub use eig::{hermitian_eig, singular_values, svd_top, HermitianEig};
pub use expm::matrix_exp;

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// A square complex matrix stored row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    dim: usize,
    entries: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, "{:+.6e}{:+.6e}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(dim: usize, entries: Vec<C64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("non-finite matrix entry".into()));
        }
        Ok(Self { dim, entries })
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                entries.push(f(i, j));
            }
        }
        Self { dim, entries }
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = C64::new(d, 0.0);
        }
        m
    }

    /// The matrix unit `|i><j|`.
    pub fn unit(dim: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(dim);
        m[(i, j)] = ONE;
        m
    }

    /// The outer product `u v^†`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        debug_assert_eq!(u.len(), v.len());
        Self::from_fn(u.len(), |i, j| u[i] * v[j].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn is_finite(&self) -> bool {
        self.entries
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|z| z * s).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.dim)
            .map(|j| (0..self.dim).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// `‖A − A†‖_F / max(‖A‖_F, 1e-300)`.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                acc += (self[(i, j)] - self[(j, i)].conj()).norm_sqr();
            }
        }
        acc.sqrt() / self.frobenius_norm().max(1e-300)
    }

    /// Replaces the matrix by its Hermitian part `(A + A†)/2`.
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.dim, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = vec![ZERO; n * n];
        for i in 0..n {
            let row = &self.entries[i * n..(i + 1) * n];
            let dst = &mut out[i * n..(i + 1) * n];
            for (k, &a) in row.iter().enumerate() {
                if a == ZERO {
                    continue;
                }
                let rrow = &rhs.entries[k * n..(k + 1) * n];
                for (d, &b) in dst.iter_mut().zip(rrow) {
                    *d += a * b;
                }
            }
        }
        Self {
            dim: n,
            entries: out,
        }
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.dim, v.len(), "matvec dimension mismatch");
        let n = self.dim;
        (0..n)
            .map(|i| {
                self.entries[i * n..(i + 1) * n]
                    .iter()
                    .zip(v)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &Self) -> Self {
        let (p, q) = (self.dim, rhs.dim);
        Self::from_fn(p * q, |r, c| self[(r / q, c / q)] * rhs[(r % q, c % q)])
    }

    /// Column-stacking vectorization.
    pub fn vec(&self) -> Vec<C64> {
        let n = self.dim;
        let mut out = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                out.push(self[(i, j)]);
            }
        }
        out
    }

    /// Inverse of [`ComplexMatrix::vec`].
    pub fn unvec(v: &[C64], dim: usize) -> Result<Self> {
        if v.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: v.len(),
            });
        }
        Ok(Self::from_fn(dim, |i, j| v[i + j * dim]))
    }

    /// Hilbert-Schmidt inner product `Tr(A† B)`.
    pub fn hs_inner(&self, rhs: &Self) -> C64 {
        self.entries
            .iter()
            .zip(&rhs.entries)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Solves `self · X = rhs` by LU with partial pivoting.
    pub fn solve(&self, rhs: &Self) -> Result<Self> {
        let n = self.dim;
        assert_eq!(n, rhs.dim);
        let mut a = self.entries.clone();
        let mut b = rhs.entries.clone();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&x, &y| a[x * n + col].norm().total_cmp(&a[y * n + col].norm()))
                .unwrap();
            let pv = a[pivot * n + col];
            if pv.norm() == 0.0 || !pv.norm().is_finite() {
                return Err(Error::Overflow);
            }
            if pivot != col {
                for k in 0..n {
                    a.swap(col * n + k, pivot * n + k);
                    b.swap(col * n + k, pivot * n + k);
                }
            }
            let inv = ONE / a[col * n + col];
            for r in col + 1..n {
                let f = a[r * n + col] * inv;
                if f == ZERO {
                    continue;
                }
                for k in col..n {
                    let t = a[col * n + k];
                    a[r * n + k] -= f * t;
                }
                for k in 0..n {
                    let t = b[col * n + k];
                    b[r * n + k] -= f * t;
                }
            }
        }
        for col in (0..n).rev() {
            let inv = ONE / a[col * n + col];
            for k in 0..n {
                let mut acc = b[col * n + k];
                for j in col + 1..n {
                    acc -= a[col * n + j] * b[j * n + k];
                }
                b[col * n + k] = acc * inv;
            }
        }
        Self::from_row_major(n, b).map_err(|_| Error::Overflow)
    }

    /// `‖A‖_1 = Tr (A†A)^{1/2}`, the sum of singular values.
    pub fn trace_norm(&self) -> f64 {
        trace_norm(self)
    }
}

/// Sum of singular values of `a`.
///
/// Hermitian inputs use their eigenvalues directly; everything else goes
/// through the Hermitian dilation so small singular values keep full
/// absolute accuracy.
pub fn trace_norm(a: &ComplexMatrix) -> f64 {
    if a.frobenius_norm() == 0.0 {
        return 0.0;
    }
    if a.hermiticity_defect() <= 1e-14 {
        let eig = hermitian_eig(&a.hermitian_part()).expect("Hermitian part is Hermitian");
        eig.eigenvalues.iter().map(|x| x.abs()).sum()
    } else {
        singular_values(a).iter().sum()
    }
}

/// Kronecker product.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kron(b)
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.entries[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.entries[i * self.dim + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim);
        ComplexMatrix {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim);
        ComplexMatrix {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

/// Euclidean norm of a complex vector.
pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Normalizes a complex vector in place; returns its former norm.
pub fn normalize(v: &mut [C64]) -> f64 {
    let n = vec_norm(v);
    if n > 0.0 {
        v.iter_mut().for_each(|z| *z /= n);
    }
    n
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_gaussian_matrix, rng_stream};

    #[test]
    fn vec_of_identity_stacks_columns() {
        let v = ComplexMatrix::identity(2).vec();
        assert_eq!(v, vec![ONE, ZERO, ZERO, ONE]);
    }

    #[test]
    fn kron_of_identities_is_identity() {
        let i = ComplexMatrix::identity(3);
        assert_eq!(i.kron(&i), ComplexMatrix::identity(9));
    }

    #[test]
    fn unvec_inverts_vec_and_checks_length() {
        let mut rng = rng_stream(1, 0);
        let a = complex_gaussian_matrix(&mut rng, 3);
        assert_eq!(ComplexMatrix::unvec(&a.vec(), 3).unwrap(), a);
        assert!(matches!(
            ComplexMatrix::unvec(&a.vec(), 2),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn vec_axb_matches_kron_form() {
        let mut rng = rng_stream(2, 0);
        for d in 2..=4 {
            let a = complex_gaussian_matrix(&mut rng, d);
            let x = complex_gaussian_matrix(&mut rng, d);
            let b = complex_gaussian_matrix(&mut rng, d);
            let direct = a.matmul(&x).matmul(&b).vec();
            let via = b.transpose().kron(&a).matvec(&x.vec());
            let err: f64 = direct
                .iter()
                .zip(&via)
                .map(|(p, q)| (p - q).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(err <= 1e-12, "d={d} err={err}");
        }
    }

    #[test]
    fn trace_norm_examples() {
        let a = ComplexMatrix::from_real_diag(&[1.0, -1.0]);
        assert!((trace_norm(&a) - 2.0).abs() < 1e-15);
        let rho = ComplexMatrix::from_real_diag(&[0.2, 0.3, 0.5]);
        assert!((trace_norm(&rho) - 1.0).abs() < 1e-15);
        assert_eq!(trace_norm(&ComplexMatrix::zeros(3)), 0.0);
    }

    #[test]
    fn trace_norm_is_adjoint_invariant() {
        let mut rng = rng_stream(3, 0);
        for k in 0..200 {
            let d = 2 + k % 3;
            let a = complex_gaussian_matrix(&mut rng, d);
            let diff = (trace_norm(&a) - trace_norm(&a.adjoint())).abs();
            assert!(diff <= 1e-10, "diff={diff}");
        }
    }

    #[test]
    fn solve_recovers_product() {
        let mut rng = rng_stream(4, 0);
        let a = complex_gaussian_matrix(&mut rng, 5);
        let x = complex_gaussian_matrix(&mut rng, 5);
        let b = a.matmul(&x);
        let got = a.solve(&b).unwrap();
        assert!((&got - &x).frobenius_norm() < 1e-10);
    }
}
