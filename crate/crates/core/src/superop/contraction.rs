use rand::Rng;
use rayon::prelude::*;

use super::SuperOp;
use crate::error::{Error, Result};
use crate::matkernel::{normalize, svd_top, ComplexMatrix, C64};
use crate::rng::{complex_gaussian, haar_vector, rng_stream};
use crate::states::{hilbert_d, make_state, DensityMatrix};
use crate::tolerance::Tolerances;

/// How the supremum defining `c(φ)` is searched.
///
/// Both modes search pairs of pure inputs. This loses nothing: the image of
/// the state space is the projectivized convex hull of the images of pure
/// states, balls of the projective metric are convex, and so the diameter
/// of a convex hull equals the diameter of the generating set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContractionMode {
    /// Haar-random pure pairs, each refined by `n_ascent` hill-climbing steps.
    Sampled { n_pairs: usize, n_ascent: usize },
    /// All pairs of a Bloch-sphere grid with `resolution` polar and
    /// `2 · resolution` azimuthal angles, then local refinement. `D = 2` only.
    ExactGridD2 { resolution: usize },
}

impl ContractionMode {
    pub const DEFAULT_SAMPLED: ContractionMode = ContractionMode::Sampled {
        n_pairs: 24,
        n_ascent: 60,
    };

    pub fn id(&self) -> String {
        match self {
            ContractionMode::Sampled { n_pairs, n_ascent } => {
                format!("sampled(n_pairs={n_pairs},n_ascent={n_ascent})")
            }
            ContractionMode::ExactGridD2 { resolution } => format!("grid_d2(resolution={resolution})"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ContractionEstimate {
    /// Estimated `c(φ)`; values at or below the contraction floor are zero.
    pub value: f64,
    /// True when `value` is only known to be a lower bound.
    pub lower_bound: bool,
    /// Gain of local refinement over the coarse search.
    pub error_bar: f64,
    /// Maximizing pair of input vectors.
    pub pair: (Vec<C64>, Vec<C64>),
}

fn image(phi: &SuperOp, psi: &[C64]) -> Result<DensityMatrix> {
    let y = phi.apply(&ComplexMatrix::outer(psi, psi))?;
    let tr = y.trace().re;
    if !(tr > Tolerances::DEFAULT.kernel) {
        return Err(Error::KernelHit(tr));
    }
    make_state(&y.scale_real(1.0 / tr))
}

fn pair_value(phi: &SuperOp, a: &[C64], b: &[C64]) -> Result<f64> {
    Ok(hilbert_d(&image(phi, a)?, &image(phi, b)?))
}

fn perturb<R: Rng + ?Sized>(rng: &mut R, v: &[C64], step: f64) -> Vec<C64> {
    let mut w: Vec<C64> = v.iter().map(|z| z + complex_gaussian(rng) * step).collect();
    if normalize(&mut w) == 0.0 {
        return v.to_vec();
    }
    w
}

/// Adaptive stochastic hill climb on a pair of unit vectors.
fn climb<R: Rng + ?Sized>(
    phi: &SuperOp,
    rng: &mut R,
    mut a: Vec<C64>,
    mut b: Vec<C64>,
    mut value: f64,
    steps: usize,
    mut step: f64,
) -> Result<(f64, Vec<C64>, Vec<C64>)> {
    for _ in 0..steps {
        if value >= 1.0 {
            break;
        }
        let a2 = perturb(rng, &a, step);
        let b2 = perturb(rng, &b, step);
        let v2 = pair_value(phi, &a2, &b2)?;
        if v2 > value {
            value = v2;
            a = a2;
            b = b2;
            step = (step * 1.5).min(1.0);
        } else {
            step = (step * 0.7).max(1e-7);
        }
    }
    Ok((value, a, b))
}

fn floored(v: f64) -> f64 {
    if v <= Tolerances::DEFAULT.contraction_floor {
        0.0
    } else {
        v
    }
}

/// Estimates the contraction coefficient
/// `c(φ) = sup d(φ·A, φ·B)` over pairs of states.
pub fn contraction_coeff<R: Rng + ?Sized>(
    phi: &SuperOp,
    mode: ContractionMode,
    rng: &mut R,
) -> Result<ContractionEstimate> {
    match mode {
        ContractionMode::Sampled { n_pairs, n_ascent } => sampled(phi, n_pairs.max(1), n_ascent, rng),
        ContractionMode::ExactGridD2 { resolution } => {
            if phi.dim() != 2 {
                return Err(Error::UnsupportedDim(phi.dim()));
            }
            grid_d2(phi, resolution.max(2), rng)
        }
    }
}

fn sampled<R: Rng + ?Sized>(
    phi: &SuperOp,
    n_pairs: usize,
    n_ascent: usize,
    rng: &mut R,
) -> Result<ContractionEstimate> {
    let d = phi.dim();
    let mut coarse = 0.0f64;
    let mut best = (f64::NEG_INFINITY, Vec::new(), Vec::new());
    for _ in 0..n_pairs {
        let a = haar_vector(rng, d);
        let b = haar_vector(rng, d);
        let v0 = pair_value(phi, &a, &b)?;
        coarse = coarse.max(v0);
        let found = climb(phi, rng, a, b, v0, n_ascent, 0.3)?;
        if found.0 > best.0 {
            best = found;
        }
    }
    Ok(ContractionEstimate {
        value: floored(best.0),
        lower_bound: true,
        error_bar: best.0 - coarse,
        pair: (best.1, best.2),
    })
}

fn bloch(theta: f64, phase: f64) -> Vec<C64> {
    vec![
        C64::new((theta / 2.0).cos(), 0.0),
        C64::from_polar((theta / 2.0).sin(), phase),
    ]
}

fn grid_d2<R: Rng + ?Sized>(phi: &SuperOp, res: usize, rng: &mut R) -> Result<ContractionEstimate> {
    use std::f64::consts::PI;
    let mut points = Vec::with_capacity(2 * res * res);
    for k in 0..res {
        let theta = PI * (k as f64 + 0.5) / res as f64;
        for l in 0..2 * res {
            points.push(bloch(theta, PI * l as f64 / res as f64));
        }
    }
    let images = points
        .par_iter()
        .map(|p| image(phi, p))
        .collect::<Result<Vec<_>>>()?;
    let n = images.len();
    let mut scored: Vec<(f64, usize, usize)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let images = &images;
            (i + 1..n).map(move |j| (hilbert_d(&images[i], &images[j]), i, j))
        })
        .collect();
    let order = |x: &(f64, usize, usize), y: &(f64, usize, usize)| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2));
    if scored.len() > 8 {
        scored.select_nth_unstable_by(7, order);
        scored.truncate(8);
    }
    scored.sort_by(order);
    let coarse = scored.first().map_or(0.0, |s| s.0);

    let step = PI / res as f64;
    let mut best = (coarse, points[0].clone(), points[0].clone());
    if let Some(&(v, i, j)) = scored.first() {
        best = (v, points[i].clone(), points[j].clone());
    }
    let seed: u64 = rng.random();
    for (k, &(v, i, j)) in scored.iter().take(8).enumerate() {
        let mut local = rng_stream(seed, k as u64);
        let found = climb(phi, &mut local, points[i].clone(), points[j].clone(), v, 200, step)?;
        if found.0 > best.0 {
            best = found;
        }
    }
    Ok(ContractionEstimate {
        value: floored(best.0),
        lower_bound: false,
        error_bar: best.0 - coarse,
        pair: (best.1, best.2),
    })
}

#[derive(Debug, Clone, Copy)]
pub struct NormEstimate {
    /// Best `‖φ(uv†)‖₁` found; a lower bound on the induced norm.
    pub value: f64,
    /// Spread between the best and worst restart.
    pub spread: f64,
}

/// Lower bound on `sup{‖φ(X)‖₁ : ‖X‖₁ ≤ 1}` by alternating ascent over
/// rank-one inputs `uv†`, the extreme points of the trace-norm ball.
pub fn norm_1to1<R: Rng + ?Sized>(phi: &SuperOp, n_restarts: usize, rng: &mut R) -> NormEstimate {
    let d = phi.dim();
    let adj = phi.adjoint();
    let mut results = Vec::with_capacity(n_restarts.max(1));
    for _ in 0..n_restarts.max(1) {
        let mut u = haar_vector(rng, d);
        let mut v = haar_vector(rng, d);
        let mut best = 0.0f64;
        for _ in 0..100 {
            let y = phi.apply(&ComplexMatrix::outer(&u, &v)).expect("dimension matches");
            let trip = svd_top(&y, 1e-13);
            let value: f64 = trip.iter().map(|t| t.0).sum();
            if trip.is_empty() || value <= best * (1.0 + 1e-14) {
                best = best.max(value);
                break;
            }
            best = value;
            let mut w = ComplexMatrix::zeros(d);
            for (_, a, b) in &trip {
                w = &w + &ComplexMatrix::outer(a, b);
            }
            let m = adj.apply(&w).expect("dimension matches");
            match svd_top(&m, 0.0).into_iter().next() {
                Some((_, a, b)) => {
                    u = a;
                    v = b;
                }
                None => break,
            }
        }
        results.push(best);
    }
    let max = results.iter().copied().fold(0.0, f64::max);
    let min = results.iter().copied().fold(f64::INFINITY, f64::min);
    NormEstimate {
        value: max,
        spread: max - min,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::complex_gaussian_matrix;

    #[test]
    fn identity_has_c_one() {
        let est = contraction_coeff(
            &SuperOp::identity(3),
            ContractionMode::DEFAULT_SAMPLED,
            &mut rng_stream(0, 0),
        )
        .unwrap();
        assert_eq!(est.value, 1.0);
    }

    #[test]
    fn fully_depolarizing_has_c_zero() {
        let est = contraction_coeff(
            &SuperOp::depolarizing(2, 1.0),
            ContractionMode::ExactGridD2 { resolution: 6 },
            &mut rng_stream(0, 0),
        )
        .unwrap();
        assert_eq!(est.value, 0.0);
    }

    #[test]
    fn depolarizing_half_grid() {
        let est = contraction_coeff(
            &SuperOp::depolarizing(2, 0.5),
            ContractionMode::ExactGridD2 { resolution: 12 },
            &mut rng_stream(0, 0),
        )
        .unwrap();
        assert!((est.value - 0.8).abs() < 1e-9, "{}", est.value);
    }

    #[test]
    fn grid_rejects_other_dims() {
        let r = contraction_coeff(
            &SuperOp::identity(3),
            ContractionMode::ExactGridD2 { resolution: 4 },
            &mut rng_stream(0, 0),
        );
        assert!(matches!(r, Err(Error::UnsupportedDim(3))));
    }

    #[test]
    fn norm_examples() {
        let mut rng = rng_stream(1, 0);
        assert!((norm_1to1(&SuperOp::identity(3), 4, &mut rng).value - 1.0).abs() < 1e-10);
        assert!((norm_1to1(&SuperOp::identity(3).scale(2.0), 4, &mut rng).value - 2.0).abs() < 1e-10);
        let g = complex_gaussian_matrix(&mut rng, 2);
        let u = SuperOp::unitary_conjugation(&crate::matkernel::matrix_exp(&(&g - &g.adjoint())).unwrap());
        let phi = SuperOp::depolarizing(2, 0.3).compose(&u).unwrap();
        assert!((norm_1to1(&phi, 8, &mut rng).value - 1.0).abs() < 1e-8);
    }
}
