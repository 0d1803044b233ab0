//! Small statistics helpers: least-squares lines, quantiles and the
//! percentile bootstrap.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::rng_stream;

/// Resamples used by every bootstrap in the crate.
pub const BOOTSTRAP_RESAMPLES: usize = 1000;
/// Master seed of the bootstrap resampling stream.
pub const BOOTSTRAP_SEED: u64 = 0xB007;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares `y ≈ slope · x + intercept`.
///
/// `None` with fewer than two points or constant `x`. A perfectly flat `y`
/// gets `r2 = 1`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - slope * a - intercept).powi(2))
        .sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    Some(LineFit { slope, intercept, r2 })
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Linear-interpolation quantile (type 7) of unsorted data.
pub fn quantile(v: &[f64], q: f64) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (s.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    s[lo] + (s[hi] - s[lo]) * (pos - lo as f64)
}

/// Sample Pearson correlation; `None` when either variance vanishes.
pub fn correlation(x: &[f64], y: &[f64]) -> Option<f64> {
    let mx = mean(x);
    let my = mean(y);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bootstrap {
    pub estimate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub std_err: f64,
}

/// Percentile bootstrap (95%) of `stat` over index resamples of `0..n`.
///
/// `stream` separates the resampling stream of different statistics.
pub fn bootstrap_indices(n: usize, stream: u64, stat: impl Fn(&[usize]) -> f64) -> Bootstrap {
    let all: Vec<usize> = (0..n).collect();
    let estimate = stat(&all);
    if n < 2 {
        return Bootstrap {
            estimate,
            ci_low: estimate,
            ci_high: estimate,
            std_err: 0.0,
        };
    }
    let mut rng = rng_stream(BOOTSTRAP_SEED, stream);
    let mut idx = vec![0usize; n];
    let reps: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| {
            idx.iter_mut().for_each(|i| *i = rng.random_range(0..n));
            stat(&idx)
        })
        .collect();
    let m = mean(&reps);
    let var = reps.iter().map(|r| (r - m).powi(2)).sum::<f64>() / (reps.len() - 1) as f64;
    Bootstrap {
        estimate,
        ci_low: quantile(&reps, 0.025),
        ci_high: quantile(&reps, 0.975),
        std_err: var.sqrt(),
    }
}

/// Bootstrap of the mean of `v`.
pub fn bootstrap_mean(v: &[f64], stream: u64) -> Bootstrap {
    bootstrap_indices(v.len(), stream, |idx| {
        idx.iter().map(|&i| v[i]).sum::<f64>() / idx.len() as f64
    })
}
