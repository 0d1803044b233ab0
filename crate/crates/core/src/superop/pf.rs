use super::{contraction_coeff, ContractionMode, SuperOp};
use crate::error::Result;
use crate::rng::rng_stream;
use crate::states::{hilbert_d, DensityMatrix};
use crate::tolerance::Tolerances;

/// Right and left Perron-Frobenius eigenmatrices, both of unit trace.
#[derive(Debug, Clone)]
pub struct PFResult {
    pub r: DensityMatrix,
    pub l: DensityMatrix,
    /// Spectral radius `Λ = Tr φ(R)`.
    pub spectral_radius: f64,
    pub converged: bool,
    /// `max(‖φ(R) − ΛR‖₁, ‖φ†(L) − ΛL‖₁)`.
    pub residual: f64,
    pub iterations: usize,
}

fn power(phi: &SuperOp, tol: &Tolerances) -> Result<(DensityMatrix, bool, usize)> {
    let mut x = DensityMatrix::maximally_mixed(phi.dim());
    for it in 1..=tol.pf_max_iter {
        let next = phi.projective_apply(&x)?;
        let step = hilbert_d(&next, &x);
        x = next;
        if step < tol.pf_step {
            return Ok((x, true, it));
        }
    }
    Ok((x, false, tol.pf_max_iter))
}

fn residual(phi: &SuperOp, x: &DensityMatrix, lambda: f64) -> Result<f64> {
    let y = phi.apply(x.matrix())?;
    Ok((&y - &x.matrix().scale_real(lambda)).trace_norm())
}

/// Perron-Frobenius eigenmatrices by projective power iteration from `I/D`
/// for `φ` and `φ†`.
///
/// The iteration contracts at rate `c(φ)` in the projective metric. When it
/// stalls and `φ` shows no contraction (`ĉ ≥ 1 − 1e-6`), `R = L = I/D` is
/// returned with `converged = false`.
pub fn pf_eigenmatrices(phi: &SuperOp) -> Result<PFResult> {
    pf_eigenmatrices_with(phi, &Tolerances::DEFAULT)
}

pub fn pf_eigenmatrices_with(phi: &SuperOp, tol: &Tolerances) -> Result<PFResult> {
    let adj = phi.adjoint();
    let (r, conv_r, it_r) = power(phi, tol)?;
    let (l, conv_l, it_l) = power(&adj, tol)?;
    let converged = conv_r && conv_l;
    let (r, l) = if converged {
        (r, l)
    } else {
        let c = contraction_coeff(phi, ContractionMode::DEFAULT_SAMPLED, &mut rng_stream(0, 0))?;
        if c.value >= 1.0 - 1e-6 {
            let mixed = DensityMatrix::maximally_mixed(phi.dim());
            (mixed.clone(), mixed)
        } else {
            (r, l)
        }
    };
    let lambda = phi.apply(r.matrix())?.trace().re;
    let res = residual(phi, &r, lambda)?.max(residual(&adj, &l, lambda)?);
    Ok(PFResult {
        r,
        l,
        spectral_radius: lambda,
        converged,
        residual: res,
        iterations: it_r.max(it_l),
    })
}
