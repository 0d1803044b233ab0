//! Matrix kernels, states and sampling checked against independent oracles.

mod common;

use common::{from_na, to_na};
use ergoprop::matkernel::{hermitian_eig, matrix_exp, trace_norm, ComplexMatrix, C64};
use ergoprop::rng::{complex_gaussian_matrix, gue, rng_stream};
use ergoprop::states::{hilbert_d, m_coeff, make_state, sample_state, StateKind};
use ergoprop::DensityMatrix;
use proptest::prelude::*;
use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};

#[test]
fn trace_norm_matches_svd_oracle() {
    let mut rng = rng_stream(11, 0);
    for d in [2, 3, 4] {
        for _ in 0..50 {
            let a = complex_gaussian_matrix(&mut rng, d);
            let oracle: f64 = to_na(&a).singular_values().iter().sum();
            assert!((trace_norm(&a) - oracle).abs() <= 1e-10 * oracle.max(1.0));
            assert!((trace_norm(&a) - trace_norm(&a.adjoint())).abs() <= 1e-10);
        }
    }
}

#[test]
fn eigenvalues_match_hermitian_oracle_and_sum_to_trace() {
    let mut rng = rng_stream(12, 0);
    for d in [2, 3, 4, 6, 9] {
        let a = gue(&mut rng, d, 1.0);
        let e = hermitian_eig(&a).unwrap();
        let mut oracle: Vec<f64> = to_na(&a).symmetric_eigenvalues().iter().copied().collect();
        oracle.sort_by(f64::total_cmp);
        for (x, y) in e.eigenvalues.iter().zip(&oracle) {
            assert!((x - y).abs() <= 1e-10);
        }
        let sum: f64 = e.eigenvalues.iter().sum();
        assert!((sum - a.trace().re).abs() <= 1e-10);
        let v = &e.eigenvectors;
        let vv = v.adjoint().matmul(v);
        assert!((&vv - &ComplexMatrix::identity(d)).frobenius_norm() <= 1e-10);
    }
}

#[test]
fn matrix_exp_matches_oracle() {
    let mut rng = rng_stream(13, 0);
    for d in [2, 4, 9] {
        for scale in [0.1, 1.0, 5.0] {
            let a = complex_gaussian_matrix(&mut rng, d).scale_real(scale / d as f64);
            let oracle = from_na(&to_na(&a).exp());
            let e = matrix_exp(&a).unwrap();
            assert!((&e - &oracle).frobenius_norm() <= 1e-11 * oracle.frobenius_norm());
            let id = e.matmul(&matrix_exp(&a.scale_real(-1.0)).unwrap());
            assert!((&id - &ComplexMatrix::identity(d)).frobenius_norm() <= 1e-9);
        }
    }
}

fn arb_matrix(d: usize) -> impl Strategy<Value = ComplexMatrix> {
    proptest::collection::vec((-3.0f64..3.0, -3.0f64..3.0), d * d)
        .prop_map(move |v| ComplexMatrix::from_fn(d, |r, c| C64::new(v[r * d + c].0, v[r * d + c].1)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn vec_of_product_is_kron_form(a in arb_matrix(3), x in arb_matrix(3), b in arb_matrix(3)) {
        let lhs = a.matmul(&x).matmul(&b).vec();
        let rhs = b.transpose().kron(&a).matvec(&x.vec());
        let err: f64 = lhs.iter().zip(&rhs).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt();
        prop_assert!(err <= 1e-12 * (1.0 + lhs.iter().map(|z| z.norm()).sum::<f64>()));
        prop_assert_eq!(ComplexMatrix::unvec(&x.vec(), 3).unwrap(), x);
    }

    #[test]
    fn trace_norm_adjoint_invariant(a in arb_matrix(4)) {
        prop_assert!((trace_norm(&a) - trace_norm(&a.adjoint())).abs() <= 1e-10 * (1.0 + trace_norm(&a)));
    }

    #[test]
    fn m_product_bounds(seed in any::<u64>(), d in 2usize..5) {
        let mut rng = rng_stream(seed, 0);
        let kind = |r: &mut ergoprop::rng::StreamRng| if r.random::<bool>() { StateKind::HaarPure } else { StateKind::FullRankHS };
        let (ka, kb) = (kind(&mut rng), kind(&mut rng));
        let a = sample_state(&mut rng, d, ka);
        let b = sample_state(&mut rng, d, kb);
        let p = m_coeff(&a, &b) * m_coeff(&b, &a);
        prop_assert!((0.0..=1.0 + 1e-12).contains(&p));
        prop_assert!((hilbert_d(&a, &b) - hilbert_d(&b, &a)).abs() <= 1e-12);
    }
}

#[test]
fn metric_sandwich() {
    let mut rng = rng_stream(14, 0);
    for d in [2, 3, 4] {
        let mut violations = 0;
        for k in 0..1000 {
            let rho = sample_state(&mut rng, d, StateKind::FullRankHS);
            let kind = if k % 2 == 0 { StateKind::HaarPure } else { StateKind::FullRankHS };
            let delta = sample_state(&mut rng, d, kind);
            let tn = (rho.matrix() - delta.matrix()).trace_norm();
            let dd = hilbert_d(&rho, &delta);
            if !(0.5 * tn <= dd + 1e-9 && dd <= tn / rho.min_eigenvalue() + 1e-9) {
                violations += 1;
            }
        }
        assert_eq!(violations, 0, "D = {d}");
    }
}

#[test]
fn pure_pairs_approach_diameter_one() {
    let mut rng = rng_stream(15, 0);
    let mut best = 0.0f64;
    for _ in 0..10_000 {
        let a = sample_state(&mut rng, 2, StateKind::HaarPure);
        let b = sample_state(&mut rng, 2, StateKind::HaarPure);
        best = best.max(hilbert_d(&a, &b));
    }
    assert!(best >= 1.0 - 1e-6);
}

#[test]
fn hs_states_are_interior() {
    let mut rng = rng_stream(16, 0);
    assert!((0..1000).all(|_| sample_state(&mut rng, 3, StateKind::FullRankHS).is_interior()));
}

#[test]
fn diagonal_oracle_for_m() {
    // For commuting diagonal states m(A,B) = min_i A_ii / B_ii.
    let mut rng = rng_stream(17, 0);
    for _ in 0..200 {
        let raw_a: Vec<f64> = (0..3).map(|_| rng.random_range(0.05..1.0)).collect();
        let raw_b: Vec<f64> = (0..3).map(|_| rng.random_range(0.05..1.0)).collect();
        let (sa, sb): (f64, f64) = (raw_a.iter().sum(), raw_b.iter().sum());
        let av: Vec<f64> = raw_a.iter().map(|x| x / sa).collect();
        let bv: Vec<f64> = raw_b.iter().map(|x| x / sb).collect();
        let a = make_state(&ComplexMatrix::from_real_diag(&av)).unwrap();
        let b = make_state(&ComplexMatrix::from_real_diag(&bv)).unwrap();
        let oracle = av.iter().zip(&bv).map(|(x, y)| x / y).fold(f64::INFINITY, f64::min);
        assert!((m_coeff(&a, &b) - oracle).abs() <= 1e-12);
    }
    let half = DensityMatrix::maximally_mixed(2);
    let a = make_state(&ComplexMatrix::from_real_diag(&[0.75, 0.25])).unwrap();
    assert!((hilbert_d(&a, &half) - 0.5).abs() <= 1e-12);
}

/// Two-sample Kolmogorov–Smirnov statistic.
fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn rng_streams_are_independent_by_ks() {
    let a: Vec<f64> = {
        let mut r = rng_stream(99, 0);
        (0..10_000).map(|_| r.random::<f64>()).collect()
    };
    let b: Vec<f64> = {
        let mut r = rng_stream(99, 1);
        (0..10_000).map(|_| r.random::<f64>()).collect()
    };
    // Asymptotic critical value at 0.01: 1.628 · √((n+m)/(nm)).
    let crit = 1.628 * (2.0 / 10_000.0f64).sqrt();
    assert!(ks_two_sample(&a, &b) < crit);
    // Sanity of the Gaussian sampler against the statrs CDF.
    let mut r = rng_stream(99, 2);
    let mut z: Vec<f64> = (0..10_000).map(|_| ergoprop::rng::complex_gaussian(&mut r).re * 2f64.sqrt()).collect();
    z.sort_by(f64::total_cmp);
    let n = Normal::new(0.0, 1.0).unwrap();
    let dmax = z
        .iter()
        .enumerate()
        .map(|(i, x)| (n.cdf(*x) - i as f64 / z.len() as f64).abs().max((n.cdf(*x) - (i + 1) as f64 / z.len() as f64).abs()))
        .fold(0.0, f64::max);
    assert!(dmax < 1.628 / 100.0);
}

#[test]
fn different_masters_differ() {
    let first: std::collections::HashSet<u64> = (0..10_000u64).map(|m| rng_stream(m, 0).random::<u64>()).collect();
    assert_eq!(first.len(), 10_000);
}
