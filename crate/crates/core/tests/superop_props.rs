//! Contraction, positivity and Perron–Frobenius properties of super-operators.

mod common;

use common::{eigen_moduli, random_cp_map};
use ergoprop::matkernel::{ComplexMatrix, C64};
use ergoprop::rng::{complex_gaussian_matrix, rng_stream};
use ergoprop::states::{hilbert_d, sample_state, StateKind};
use ergoprop::superop::{
    contraction_coeff, norm_1to1, pf_eigenmatrices, strict_positivity_certificate, Certificate, ContractionMode,
};
use ergoprop::SuperOp;

const GRID: ContractionMode = ContractionMode::ExactGridD2 { resolution: 12 };
const SLACK: f64 = 5e-3;

fn grid_c(phi: &SuperOp, seed: u64) -> f64 {
    contraction_coeff(phi, GRID, &mut rng_stream(seed, 1)).unwrap().value
}

#[test]
fn contraction_inequality_on_random_pairs() {
    let mut rng = rng_stream(21, 0);
    for k in 0..5 {
        let phi = random_cp_map(&mut rng, 2);
        let c = grid_c(&phi, k);
        for j in 0..1000 {
            let kind = if j % 3 == 0 { StateKind::HaarPure } else { StateKind::FullRankHS };
            let a = sample_state(&mut rng, 2, kind);
            let b = sample_state(&mut rng, 2, StateKind::FullRankHS);
            let lhs = hilbert_d(&phi.projective_apply(&a).unwrap(), &phi.projective_apply(&b).unwrap());
            assert!(lhs <= c * hilbert_d(&a, &b) + 1e-6);
        }
    }
}

#[test]
fn submultiplicativity_and_adjoint_symmetry() {
    let mut rng = rng_stream(22, 0);
    for k in 0..100 {
        let phi = random_cp_map(&mut rng, 2);
        let psi = random_cp_map(&mut rng, 2);
        let (cp, cs) = (grid_c(&phi, k), grid_c(&psi, k + 1000));
        let both = grid_c(&phi.compose(&psi).unwrap(), k + 2000);
        assert!(both <= cp * cs + 2.0 * SLACK, "{both} > {cp}·{cs}");
        assert!((cp - grid_c(&phi.adjoint(), k + 3000)).abs() <= SLACK);
    }
}

#[test]
fn grid_agrees_with_sampled_full_rank_pairs() {
    // The sup over pure pairs bounds every full-rank pair.
    let mut rng = rng_stream(23, 0);
    for k in 0..10 {
        let phi = random_cp_map(&mut rng, 2);
        let est = contraction_coeff(&phi, GRID, &mut rng_stream(k, 1)).unwrap();
        for _ in 0..200 {
            let a = sample_state(&mut rng, 2, StateKind::FullRankHS);
            let b = sample_state(&mut rng, 2, StateKind::FullRankHS);
            let r = hilbert_d(&phi.projective_apply(&a).unwrap(), &phi.projective_apply(&b).unwrap()) / hilbert_d(&a, &b);
            assert!(r <= est.value + 1e-9);
        }
        let sampled = contraction_coeff(&phi, ContractionMode::DEFAULT_SAMPLED, &mut rng_stream(k, 2)).unwrap();
        assert!(sampled.value <= est.value + est.error_bar.max(0.0) + 1e-9);
        assert!((sampled.value - est.value).abs() <= SLACK);
    }
}

#[test]
fn depolarizing_half_is_point_eight() {
    let c = grid_c(&SuperOp::depolarizing(2, 0.5), 0);
    assert!((c - 0.8).abs() <= SLACK);
}

#[test]
fn strict_maps_contract() {
    let mut rng = rng_stream(24, 0);
    for d in [2, 3] {
        for k in 0..10 {
            let phi = random_cp_map(&mut rng, d);
            let cert = strict_positivity_certificate(&phi, &mut rng_stream(k, 3));
            assert!(matches!(cert, Certificate::CertifiedStrict { .. }));
            let c = contraction_coeff(&phi, ContractionMode::DEFAULT_SAMPLED, &mut rng_stream(k, 4)).unwrap();
            assert!(c.value < 1.0);
        }
    }
}

#[test]
fn kraus_maps_have_psd_choi_and_duality() {
    let mut rng = rng_stream(25, 0);
    for d in [2, 3, 4] {
        let ks: Vec<ComplexMatrix> = (0..2).map(|_| complex_gaussian_matrix(&mut rng, d)).collect();
        let phi = SuperOp::from_kraus(&ks).unwrap();
        assert!(phi.to_choi().min_eigenvalue >= -1e-10);
        let adj_i = phi.adjoint().apply(&ComplexMatrix::identity(d)).unwrap();
        for _ in 0..20 {
            let rho = sample_state(&mut rng, d, StateKind::FullRankHS);
            let lhs = phi.apply(rho.matrix()).unwrap().trace();
            let rhs = adj_i.matmul(rho.matrix()).trace();
            assert!((lhs - rhs).norm() <= 1e-10 * lhs.norm().max(1.0));
        }
    }
}

#[test]
fn compose_is_associative() {
    let mut rng = rng_stream(26, 0);
    for _ in 0..20 {
        let (a, b, c) = (random_cp_map(&mut rng, 2), random_cp_map(&mut rng, 2), random_cp_map(&mut rng, 2));
        let l = a.compose(&b).unwrap().compose(&c).unwrap();
        let r = a.compose(&b.compose(&c).unwrap()).unwrap();
        let scale = l.matrix().frobenius_norm();
        assert!((l.matrix() - r.matrix()).frobenius_norm() <= 1e-12 * scale);
    }
}

/// Dominant eigenpair of a matrix by plain power iteration on vectors.
fn dense_power(m: &ComplexMatrix) -> (f64, Vec<C64>) {
    let n = m.dim();
    let mut v = vec![C64::new(1.0, 0.0); n];
    let mut lambda = 0.0;
    for _ in 0..5000 {
        let w = m.matvec(&v);
        let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        lambda = norm / v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v = w.into_iter().map(|z| z / norm).collect();
    }
    (lambda, v)
}

#[test]
fn pf_matches_dense_power_iteration() {
    let mut rng = rng_stream(27, 0);
    for d in [2, 3, 4] {
        for _ in 0..50 {
            let phi = random_cp_map(&mut rng, d);
            let pf = pf_eigenmatrices(&phi).unwrap();
            assert!(pf.converged);
            let r = pf.r.matrix();
            let l = pf.l.matrix();
            let lam = pf.spectral_radius;
            assert!((&phi.apply(r).unwrap() - &r.scale_real(lam)).trace_norm() <= 1e-8 * lam);
            assert!((&phi.adjoint().apply(l).unwrap() - &l.scale_real(lam)).trace_norm() <= 1e-8 * lam);
            let (oracle, v) = dense_power(phi.matrix());
            assert!((lam - oracle).abs() <= 1e-8 * oracle);
            assert!((lam - eigen_moduli(phi.matrix())[0]).abs() <= 1e-8 * oracle);
            let vr = ComplexMatrix::unvec(&v, d).unwrap();
            let vr = vr.scale(C64::new(1.0, 0.0) / vr.trace());
            assert!((&vr - r).trace_norm() <= 1e-6);
        }
    }
}

#[test]
fn pf_of_channels() {
    let mut rng = rng_stream(28, 0);
    for d in [2, 3] {
        for _ in 0..10 {
            // Trace-preserving by normalizing Kraus operators with (Σ K†K)^{-1/2}.
            let ks: Vec<ComplexMatrix> = (0..d * d).map(|_| complex_gaussian_matrix(&mut rng, d)).collect();
            let s = ks.iter().fold(ComplexMatrix::zeros(d), |acc, k| &acc + &k.adjoint().matmul(k));
            let inv_sqrt = ergoprop::matkernel::hermitian_eig(&s).unwrap().reconstruct_with(|x| 1.0 / x.sqrt());
            let ks: Vec<ComplexMatrix> = ks.iter().map(|k| k.matmul(&inv_sqrt)).collect();
            let phi = SuperOp::from_kraus(&ks).unwrap();
            let pf = pf_eigenmatrices(&phi).unwrap();
            assert!((pf.spectral_radius - 1.0).abs() <= 1e-9);
            let mixed = ComplexMatrix::identity(d).scale_real(1.0 / d as f64);
            assert!((pf.l.matrix() - &mixed).trace_norm() <= 1e-8);
            let n = norm_1to1(&phi, 8, &mut rng_stream(1, 2));
            assert!((n.value - 1.0).abs() <= 1e-6);
        }
    }
}
