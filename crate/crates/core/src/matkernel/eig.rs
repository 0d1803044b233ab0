use super::{ComplexMatrix, C64, ZERO};
use crate::error::{Error, Result};
use crate::tolerance::Tolerances;

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Unitary; column `k` belongs to `eigenvalues[k]`.
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEig {
    pub fn eigenvector(&self, k: usize) -> Vec<C64> {
        let n = self.eigenvectors.dim();
        (0..n).map(|i| self.eigenvectors[(i, k)]).collect()
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }

    /// `V f(Λ) V†`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.eigenvectors.dim();
        let v = &self.eigenvectors;
        let fl: Vec<f64> = self.eigenvalues.iter().map(|&x| f(x)).collect();
        ComplexMatrix::from_fn(n, |i, j| {
            (0..n)
                .map(|k| v[(i, k)] * v[(j, k)].conj() * fl[k])
                .sum()
        })
    }
}

/// Cyclic complex Jacobi eigen-solver.
pub fn hermitian_eig(a: &ComplexMatrix) -> Result<HermitianEig> {
    let defect = a.hermiticity_defect();
    if defect > Tolerances::DEFAULT.hermitian {
        return Err(Error::NonHermitianInput(defect));
    }
    Ok(jacobi(a))
}

fn jacobi(a_in: &ComplexMatrix) -> HermitianEig {
    let n = a_in.dim();
    let mut a = a_in.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let total = a.frobenius_norm();
    if total == 0.0 || n == 1 {
        return finish(a, v);
    }
    let stop = (2.0 * f64::EPSILON * total).powi(2);

    for sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off <= stop {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let g = a[(p, q)];
                let absg = g.norm();
                if absg == 0.0 {
                    continue;
                }
                let (dp, dq) = (a[(p, p)].re.abs(), a[(q, q)].re.abs());
                if sweep > 3 && dp + 100.0 * absg == dp && dq + 100.0 * absg == dq {
                    a[(p, q)] = ZERO;
                    a[(q, p)] = ZERO;
                    continue;
                }
                let phase = g / absg;
                let theta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * absg);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                // V restricted to (p, q): [[c, s], [-s e^{-iθ}, c e^{-iθ}]]
                let vpp = C64::new(c, 0.0);
                let vpq = C64::new(s, 0.0);
                let vqp = -phase.conj() * s;
                let vqq = phase.conj() * c;

                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * vpp + akq * vqp;
                    a[(k, q)] = akp * vpq + akq * vqq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = vpp.conj() * apk + vqp.conj() * aqk;
                    a[(q, k)] = vpq.conj() * apk + vqq.conj() * aqk;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);

                for k in 0..n {
                    let ekp = v[(k, p)];
                    let ekq = v[(k, q)];
                    v[(k, p)] = ekp * vpp + ekq * vqp;
                    v[(k, q)] = ekp * vpq + ekq * vqq;
                }
            }
        }
    }
    finish(a, v)
}

fn finish(a: ComplexMatrix, v: ComplexMatrix) -> HermitianEig {
    let n = a.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let eigenvalues = order.iter().map(|&k| a[(k, k)].re).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, |i, j| v[(i, order[j])]);
    HermitianEig {
        eigenvalues,
        eigenvectors,
    }
}

fn dilation(a: &ComplexMatrix) -> ComplexMatrix {
    let n = a.dim();
    ComplexMatrix::from_fn(2 * n, |i, j| match (i < n, j < n) {
        (true, false) => a[(i, j - n)],
        (false, true) => a[(j, i - n)].conj(),
        _ => ZERO,
    })
}

/// Singular values in descending order.
pub fn singular_values(a: &ComplexMatrix) -> Vec<f64> {
    let n = a.dim();
    let eig = jacobi(&dilation(a));
    eig.eigenvalues[n..]
        .iter()
        .rev()
        .map(|&s| s.max(0.0))
        .collect()
}

/// Singular triplets `(σ, u, v)` with `σ > tol·σ_max`, descending, so that
/// `a ≈ Σ σ u v†` over the retained triplets.
pub fn svd_top(a: &ComplexMatrix, tol: f64) -> Vec<(f64, Vec<C64>, Vec<C64>)> {
    let n = a.dim();
    let eig = jacobi(&dilation(a));
    let smax = eig.max().max(0.0);
    if smax == 0.0 {
        return Vec::new();
    }
    let sqrt2 = std::f64::consts::SQRT_2;
    (n..2 * n)
        .rev()
        .filter(|&k| eig.eigenvalues[k] > tol * smax)
        .map(|k| {
            let w = eig.eigenvector(k);
            let u: Vec<C64> = w[..n].iter().map(|z| z * sqrt2).collect();
            let v: Vec<C64> = w[n..].iter().map(|z| z * sqrt2).collect();
            (eig.eigenvalues[k], u, v)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_gaussian_matrix, rng_stream};

    fn residual(a: &ComplexMatrix, e: &HermitianEig) -> f64 {
        (&e.reconstruct_with(|x| x) - a).frobenius_norm()
    }

    #[test]
    fn diagonal_input_sorted() {
        let a = ComplexMatrix::from_real_diag(&[3.0, 1.0, 2.0]);
        let e = hermitian_eig(&a).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn identity_has_unit_spectrum() {
        let e = hermitian_eig(&ComplexMatrix::identity(4)).unwrap();
        assert!(e.eigenvalues.iter().all(|&x| (x - 1.0).abs() < 1e-15));
    }

    #[test]
    fn random_hermitian_reconstructs() {
        let mut rng = rng_stream(10, 0);
        for d in [2, 3, 4, 9, 16, 36] {
            let g = complex_gaussian_matrix(&mut rng, d);
            let a = (&g + &g.adjoint()).scale_real(0.5);
            let e = hermitian_eig(&a).unwrap();
            let res = residual(&a, &e);
            assert!(res <= 1e-10 * a.frobenius_norm(), "d={d} res={res}");
            let v = &e.eigenvectors;
            let gram = &v.adjoint().matmul(v) - &ComplexMatrix::identity(d);
            assert!(gram.frobenius_norm() <= 1e-10);
            let tr: f64 = e.eigenvalues.iter().sum();
            assert!((tr - a.trace().re).abs() <= 1e-10);
            assert!(e.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let a = ComplexMatrix::unit(2, 0, 1);
        assert!(matches!(hermitian_eig(&a), Err(Error::NonHermitianInput(_))));
    }

    #[test]
    fn svd_triplets_reconstruct() {
        let mut rng = rng_stream(11, 0);
        let a = complex_gaussian_matrix(&mut rng, 4);
        let trip = svd_top(&a, 1e-12);
        assert_eq!(trip.len(), 4);
        let mut rec = ComplexMatrix::zeros(4);
        for (s, u, v) in &trip {
            rec = &rec + &ComplexMatrix::outer(u, v).scale_real(*s);
        }
        assert!((&rec - &a).frobenius_norm() < 1e-10);
    }
}
