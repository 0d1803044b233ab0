use rand::Rng;

use super::SuperOp;
use crate::matkernel::{hermitian_eig, normalize, ComplexMatrix, C64};
use crate::rng::haar_vector;
use crate::tolerance::Tolerances;

const RESTARTS: usize = 50;
const SWEEPS: usize = 200;

/// Three-valued strict positivity verdict.
#[derive(Debug, Clone)]
pub enum Certificate {
    /// The Choi matrix has smallest eigenvalue `choi_min > 0`, so
    /// `φ(ρ) ≥ choi_min · I` for every state.
    CertifiedStrict { choi_min: f64 },
    /// `φ(|ψ⟩⟨ψ|)` has relative smallest eigenvalue `value`.
    CertifiedNotStrict { witness: Vec<C64>, value: f64 },
    /// Neither test was conclusive; `best` is the smallest relative image
    /// eigenvalue found.
    Unknown { best: f64 },
}

impl Certificate {
    pub fn is_strict(&self) -> bool {
        matches!(self, Certificate::CertifiedStrict { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Certificate::CertifiedStrict { .. } => "strict",
            Certificate::CertifiedNotStrict { .. } => "not_strict",
            Certificate::Unknown { .. } => "unknown",
        }
    }
}

fn min_pair(m: &ComplexMatrix) -> (f64, Vec<C64>) {
    let e = hermitian_eig(&m.hermitian_part()).expect("Hermitian part is Hermitian");
    (e.min(), e.eigenvector(0))
}

/// `λ_min(φ(ψψ†)) / Tr φ(ψψ†)` and the minimizing eigenvector.
fn objective(phi: &SuperOp, psi: &[C64]) -> (f64, Vec<C64>) {
    let img = phi
        .apply(&ComplexMatrix::outer(psi, psi))
        .expect("dimension matches");
    let tr = img.trace().re;
    let (lmin, u) = min_pair(&img);
    (if tr > 0.0 { lmin / tr } else { 0.0 }, u)
}

fn along(psi: &[C64], dir: &[C64], t: f64) -> Vec<C64> {
    let mut w: Vec<C64> = psi.iter().zip(dir).map(|(p, d)| p + d * t).collect();
    normalize(&mut w);
    w
}

/// Line search along the last alternating step. Near a degenerate zero the
/// alternating iterates creep along a nearly straight path, so stepping far
/// along it saves many sweeps.
fn extrapolate(phi: &SuperOp, prev: &[C64], cur: &[C64], value: f64) -> Option<(f64, Vec<C64>)> {
    let overlap: C64 = prev.iter().zip(cur).map(|(a, b)| b.conj() * a).sum();
    let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { C64::new(1.0, 0.0) };
    let cur: Vec<C64> = cur.iter().map(|z| z * phase).collect();
    let dir: Vec<C64> = cur.iter().zip(prev).map(|(c, p)| c - p).collect();
    if dir.iter().all(|z| z.norm() == 0.0) {
        return None;
    }
    let f = |t: f64| objective(phi, &along(&cur, &dir, t)).0;
    let (mut t, mut best) = (0.0, value);
    let mut probe = 1.0;
    while probe < 1e8 {
        let v = f(probe);
        if v >= best {
            break;
        }
        t = probe;
        best = v;
        probe *= 2.0;
    }
    if t == 0.0 {
        return None;
    }
    let (mut lo, mut hi) = (t / 2.0, t * 2.0);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let a = hi - g * (hi - lo);
        let b = lo + g * (hi - lo);
        if f(a) < f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    let mid = 0.5 * (lo + hi);
    let vm = f(mid);
    let (t, best) = if vm < best { (mid, vm) } else { (t, best) };
    Some((best, along(&cur, &dir, t)))
}

/// Certifies strict positivity from the Choi spectrum, or refutes it by
/// minimizing `λ_min(φ(|ψ⟩⟨ψ|))` over pure inputs.
///
/// The minimization alternates `u ← argmin u†φ(ψψ†)u` and
/// `ψ ← argmin ψ†φ†(uu†)ψ`, which never increases the objective, with a
/// line search along successive iterates.
pub fn strict_positivity_certificate<R: Rng + ?Sized>(phi: &SuperOp, rng: &mut R) -> Certificate {
    let tol = Tolerances::DEFAULT;
    let choi_min = phi.to_choi().min_eigenvalue;
    if choi_min > tol.choi_strict {
        return Certificate::CertifiedStrict { choi_min };
    }
    let d = phi.dim();
    let adj = phi.adjoint();
    let mut best = f64::INFINITY;
    let mut best_psi = Vec::new();
    for _ in 0..RESTARTS {
        let mut psi = haar_vector(rng, d);
        let (mut value, mut u) = objective(phi, &psi);
        for _ in 0..SWEEPS {
            if value <= tol.witness {
                break;
            }
            let back = adj
                .apply(&ComplexMatrix::outer(&u, &u))
                .expect("dimension matches");
            let next = min_pair(&back).1;
            let (mut v_next, _) = objective(phi, &next);
            let mut psi_next = next.clone();
            if let Some((v, p)) = extrapolate(phi, &psi, &next, v_next) {
                v_next = v;
                psi_next = p;
            }
            if value - v_next <= 1e-16 {
                break;
            }
            psi = psi_next;
            (value, u) = objective(phi, &psi);
        }
        if value < best {
            best = value;
            best_psi = psi;
        }
        if best <= tol.witness {
            return Certificate::CertifiedNotStrict {
                witness: best_psi,
                value: best,
            };
        }
    }
    Certificate::Unknown { best }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{complex_gaussian_matrix, rng_stream};

    #[test]
    fn depolarizing_is_strict() {
        let c = strict_positivity_certificate(&SuperOp::depolarizing(3, 0.2), &mut rng_stream(0, 0));
        assert!(c.is_strict());
    }

    #[test]
    fn unitary_and_identity_are_not_strict() {
        let mut rng = rng_stream(1, 0);
        let g = complex_gaussian_matrix(&mut rng, 3);
        for phi in [SuperOp::identity(3), SuperOp::unitary_conjugation(&g)] {
            let c = strict_positivity_certificate(&phi, &mut rng);
            assert!(matches!(c, Certificate::CertifiedNotStrict { .. }), "{c:?}");
        }
    }

    #[test]
    fn hidden_kernel_direction_found() {
        // Amplitude damping to |0⟩: the image of |0⟩⟨0| is pure.
        let g = 0.6f64;
        let k0 = ComplexMatrix::from_real_diag(&[1.0, (1.0 - g).sqrt()]);
        let mut k1 = ComplexMatrix::zeros(2);
        k1[(0, 1)] = C64::new(g.sqrt(), 0.0);
        let phi = SuperOp::from_kraus(&[k0, k1]).unwrap();
        let c = strict_positivity_certificate(&phi, &mut rng_stream(2, 0));
        assert!(matches!(c, Certificate::CertifiedNotStrict { .. }), "{c:?}");
    }
}
