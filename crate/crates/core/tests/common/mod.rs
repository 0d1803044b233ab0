#![allow(dead_code)]

use ergoprop::environment::{EnvironmentModel, GeneratorSampler};
use ergoprop::lindblad::Lindbladian;
use ergoprop::matkernel::{ComplexMatrix, C64};
use ergoprop::rng::complex_gaussian_matrix;
use ergoprop::SuperOp;
use nalgebra::{DMatrix, Complex};
use rand::Rng;

pub fn to_na(a: &ComplexMatrix) -> DMatrix<Complex<f64>> {
    let n = a.dim();
    DMatrix::from_fn(n, n, |r, c| {
        let z = a[(r, c)];
        Complex::new(z.re, z.im)
    })
}

pub fn from_na(m: &DMatrix<Complex<f64>>) -> ComplexMatrix {
    ComplexMatrix::from_fn(m.nrows(), |r, c| C64::new(m[(r, c)].re, m[(r, c)].im))
}

/// Eigenvalue moduli of a general complex matrix, descending, from a Schur
/// decomposition.
pub fn eigen_moduli(a: &ComplexMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = to_na(a).schur().eigenvalues().expect("complex Schur form").iter().map(|z| z.norm()).collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// CP map with four Ginibre Kraus operators; generically strictly positive.
pub fn random_cp_map<R: Rng>(rng: &mut R, dim: usize) -> SuperOp {
    let ks: Vec<ComplexMatrix> = (0..dim * dim).map(|_| complex_gaussian_matrix(rng, dim)).collect();
    SuperOp::from_kraus(&ks).unwrap()
}

pub fn gue_ginibre(rate: f64) -> GeneratorSampler {
    GeneratorSampler::GueGinibre {
        n_jumps: 2,
        rate_scale: rate,
        hamiltonian_scale: 1.0,
    }
}

/// Bundled i.i.d. collision model, κ ≈ 0.7.
pub fn iid_model() -> EnvironmentModel {
    EnvironmentModel::IidCollision {
        dim: 2,
        sampler: gue_ginibre(0.2),
    }
}

/// Slowly mixing frozen disorder, spectral ratio ≈ 0.9–0.97.
pub fn frozen_slow() -> EnvironmentModel {
    EnvironmentModel::FrozenDisorder {
        dim: 2,
        sampler: gue_ginibre(0.03),
    }
}

/// Frozen disorder that converges well within 50 time units.
pub fn frozen_fast() -> EnvironmentModel {
    EnvironmentModel::FrozenDisorder {
        dim: 2,
        sampler: gue_ginibre(0.5),
    }
}

pub fn depolarizing_collisions(gamma: f64) -> EnvironmentModel {
    EnvironmentModel::IidCollision {
        dim: 2,
        sampler: GeneratorSampler::Atoms {
            generators: vec![Lindbladian::depolarizing(2, gamma).unwrap()],
            weights: vec![1.0],
        },
    }
}

pub fn sigma(k: usize) -> ComplexMatrix {
    let (o, z, i) = (C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 1.0));
    let e = match k {
        1 => vec![z, o, o, z],
        2 => vec![z, -i, i, z],
        _ => vec![o, z, z, -o],
    };
    ComplexMatrix::from_row_major(2, e).unwrap()
}

/// Amplitude damping at rate `gamma` plus a σ_x drive.
pub fn damped_drive(gamma: f64, omega: f64) -> Lindbladian {
    let lower = ComplexMatrix::unit(2, 0, 1);
    Lindbladian::new(sigma(1).scale_real(omega), vec![lower], vec![gamma]).unwrap()
}

/// Two-state Markov switching between dephasing-with-drive and amplitude
/// damping.
pub fn markov_model() -> EnvironmentModel {
    let a = Lindbladian::new(sigma(1).scale_real(0.7), vec![sigma(3)], vec![0.3]).unwrap();
    let b = damped_drive(0.6, 0.4);
    EnvironmentModel::MarkovModulated {
        dim: 2,
        generators: vec![a, b],
        q: vec![vec![-0.5, 0.5], vec![0.3, -0.3]],
        pi: vec![0.375, 0.625],
    }
}
