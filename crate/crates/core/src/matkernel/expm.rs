use super::ComplexMatrix;
use crate::error::{Error, Result};

// Order-13 diagonal Padé coefficients and the matching scaling threshold
// (Higham, "The scaling and squaring method for the matrix exponential
// revisited", 2005).
const B: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA_13: f64 = 5.371920351148152;

fn lin(terms: &[(f64, &ComplexMatrix)], n: usize) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(n);
    for (c, m) in terms {
        for (o, x) in out.entries.iter_mut().zip(&m.entries) {
            *o += x * c;
        }
    }
    out
}

/// `e^A` by scaling and squaring with the order-13 Padé approximant.
///
/// Targets relative error around `1e-12` for `‖A‖ ≤ 50`.
pub fn matrix_exp(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.dim();
    if !a.is_finite() {
        return Err(Error::Overflow);
    }
    let norm = a.norm_one();
    if norm == 0.0 {
        return Ok(ComplexMatrix::identity(n));
    }
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = a.scale_real(0.5f64.powi(s));

    let ident = ComplexMatrix::identity(n);
    let a2 = a.matmul(&a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);

    let inner_u = lin(&[(B[13], &a6), (B[11], &a4), (B[9], &a2)], n);
    let u = a.matmul(
        &(&a6.matmul(&inner_u)
            + &lin(&[(B[7], &a6), (B[5], &a4), (B[3], &a2), (B[1], &ident)], n)),
    );
    let inner_v = lin(&[(B[12], &a6), (B[10], &a4), (B[8], &a2)], n);
    let v = &a6.matmul(&inner_v)
        + &lin(&[(B[6], &a6), (B[4], &a4), (B[2], &a2), (B[0], &ident)], n);

    let mut r = (&v - &u).solve(&(&v + &u))?;
    for _ in 0..s {
        r = r.matmul(&r);
    }
    if !r.is_finite() {
        return Err(Error::Overflow);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_gaussian_matrix, rng_stream};
    use crate::matkernel::C64;

    #[test]
    fn zero_gives_identity() {
        assert_eq!(
            matrix_exp(&ComplexMatrix::zeros(3)).unwrap(),
            ComplexMatrix::identity(3)
        );
    }

    #[test]
    fn diagonal_case() {
        let a = ComplexMatrix::from_real_diag(&[0.7, -2.5]);
        let e = matrix_exp(&a).unwrap();
        assert!((e[(0, 0)].re - 0.7f64.exp()).abs() < 1e-14);
        assert!((e[(1, 1)].re - (-2.5f64).exp()).abs() < 1e-14);
        assert!(e[(0, 1)].norm() < 1e-15);

        let big = ComplexMatrix::from_real_diag(&[30.0, -45.0]);
        let e = matrix_exp(&big).unwrap();
        let rel = (e[(0, 0)].re - 30f64.exp()).abs() / 30f64.exp();
        assert!(rel < 1e-12, "rel={rel}");
    }

    #[test]
    fn nilpotent_series_truncates() {
        let nil = ComplexMatrix::unit(2, 0, 1);
        let e = matrix_exp(&nil).unwrap();
        let expect = &ComplexMatrix::identity(2) + &nil;
        assert!((&e - &expect).frobenius_norm() < 1e-15);
    }

    #[test]
    fn exp_times_exp_neg_is_identity() {
        let mut rng = rng_stream(20, 0);
        for d in [2, 3, 4, 9] {
            let g = complex_gaussian_matrix(&mut rng, d);
            let a = g.scale_real(10.0 / g.norm_one());
            let p = matrix_exp(&a).unwrap().matmul(&matrix_exp(&a.scale_real(-1.0)).unwrap());
            let err = (&p - &ComplexMatrix::identity(d)).frobenius_norm();
            assert!(err <= 1e-9, "d={d} err={err}");
        }
    }

    #[test]
    fn rotation_generator() {
        // exp([[0, -t], [t, 0]]) is the rotation by t.
        let t = 1.3;
        let a = ComplexMatrix::from_fn(2, |i, j| match (i, j) {
            (0, 1) => C64::new(-t, 0.0),
            (1, 0) => C64::new(t, 0.0),
            _ => C64::new(0.0, 0.0),
        });
        let e = matrix_exp(&a).unwrap();
        assert!((e[(0, 0)].re - t.cos()).abs() < 1e-14);
        assert!((e[(1, 0)].re - t.sin()).abs() < 1e-14);
    }

    #[test]
    fn overflow_is_reported() {
        let a = ComplexMatrix::from_real_diag(&[1000.0]);
        assert_eq!(matrix_exp(&a), Err(Error::Overflow));
    }
}
