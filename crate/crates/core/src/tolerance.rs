//! Numerical tolerances shared by every module.
//!
//! All thresholds live in one record so that tests and experiment configs
//! can refer to a single source. [`Tolerances::DEFAULT`] carries the values
//! the library uses when no override is given.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative Frobenius asymmetry accepted as Hermitian.
    pub hermitian: f64,
    /// Most negative eigenvalue clipped to zero when validating a state.
    pub psd: f64,
    /// Accepted deviation of a state's trace from one.
    pub trace: f64,
    /// Per-dimension rank cutoff: eigenvalues at or below `rank * D` are zero.
    pub rank: f64,
    /// Smallest trace accepted in the projective action.
    pub kernel: f64,
    /// Choi eigenvalue above which a map is certified strictly positive.
    pub choi_strict: f64,
    /// Minimal image eigenvalue that witnesses a non-strictly-positive map.
    pub witness: f64,
    /// Contraction estimates at or below this value count as exact zero.
    pub contraction_floor: f64,
    /// Successive-iterate distance that stops Perron-Frobenius iteration.
    pub pf_step: f64,
    /// Iteration cap for Perron-Frobenius power iteration.
    pub pf_max_iter: usize,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        hermitian: 1e-10,
        psd: 1e-10,
        trace: 1e-10,
        rank: 1e-10,
        kernel: 1e-12,
        choi_strict: 1e-10,
        witness: 1e-12,
        contraction_floor: 1e-14,
        pf_step: 1e-12,
        pf_max_iter: 100_000,
    };

    /// Rank cutoff for a `dim`-dimensional unit-trace matrix.
    pub fn rank_cutoff(&self, dim: usize) -> f64 {
        self.rank * dim as f64
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}
