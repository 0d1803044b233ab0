//! Seeded, splittable random streams and the Gaussian ensembles built on them.
//!
//! A stream is identified by `(master, stream_id)`. The master seed is
//! expanded into a ChaCha key and `stream_id` selects the ChaCha stream
//! (nonce), so distinct ids never share keystream blocks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matkernel::{normalize, ComplexMatrix, C64};

pub type StreamRng = ChaCha8Rng;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent random stream `stream_id` under `master_seed`.
pub fn rng_stream(master_seed: u64, stream_id: u64) -> StreamRng {
    let mut key = [0u8; 32];
    let mut state = master_seed;
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream_id);
    rng
}

/// Mixes a tuple of identifiers into one stream id.
pub fn stream_id(parts: &[u64]) -> u64 {
    let mut state = 0x5EED_0F_E46_0D1Cu64;
    let mut acc = 0u64;
    for &p in parts {
        state ^= p;
        acc = splitmix64(&mut state) ^ acc.rotate_left(17);
    }
    acc
}

/// Complex standard Gaussian with `E|z|^2 = 1`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Ginibre matrix with i.i.d. complex standard Gaussian entries.
pub fn complex_gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, |_, _| complex_gaussian(rng))
}

/// Haar-uniform unit vector in `C^dim`.
pub fn haar_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<C64> {
    loop {
        let mut v: Vec<C64> = (0..dim).map(|_| complex_gaussian(rng)).collect();
        if normalize(&mut v) > 1e-300 {
            return v;
        }
    }
}

/// GUE matrix with off-diagonal variance `scale^2 / dim`.
pub fn gue<R: Rng + ?Sized>(rng: &mut R, dim: usize, scale: f64) -> ComplexMatrix {
    let g = complex_gaussian_matrix(rng, dim);
    (&g + &g.adjoint()).scale_real(scale / (2.0 * dim as f64).sqrt())
}
