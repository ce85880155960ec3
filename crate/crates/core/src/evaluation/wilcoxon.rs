use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// The smaller of the two signed-rank sums.
    pub statistic: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    /// `(W+ - n(n+1)/4) / sd`; positive when `x` tends to exceed `y`.
    pub z: f64,
    pub p_value: f64,
    /// Exact sign-flip p-value, computed when `n_effective <= EXACT_MAX_N`.
    pub exact_p_value: Option<f64>,
    /// Pairs left after dropping zero differences.
    pub n_effective: usize,
    pub alpha: f64,
    pub reject: bool,
}

/// Largest effective sample size for which the exact p-value is also reported.
pub const EXACT_MAX_N: usize = 12;

struct Ranked {
    /// Mid-ranks of `|d|`, doubled so they are integers.
    doubled: Vec<u64>,
    positive: Vec<bool>,
    tie_term: f64,
}

fn rank_differences(x: &[f64], y: &[f64]) -> Result<Ranked> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(format!("{} vs {} paired values", x.len(), y.len())));
    }
    if let Some(v) = x.iter().chain(y).find(|v| !v.is_finite()) {
        return Err(Error::UndefinedTest(format!("non-finite value {v}")));
    }
    let mut d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    if d.is_empty() {
        return Err(Error::UndefinedTest("every paired difference is zero".into()));
    }
    if d.len() < 2 {
        return Err(Error::UndefinedTest("fewer than two non-zero differences".into()));
    }
    d.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    let n = d.len();
    let mut doubled = vec![0u64; n];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && d[j + 1].abs() == d[i].abs() {
            j += 1;
        }
        // positions i..=j share the mean of ranks i+1..=j+1
        let twice_mid = (i + 1 + j + 1) as u64;
        doubled[i..=j].fill(twice_mid);
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    Ok(Ranked { doubled, positive: d.iter().map(|v| *v > 0.0).collect(), tie_term })
}

/// Signed-rank test of paired samples: mid-ranks for tied `|d|`, normal
/// approximation with tie-corrected variance, no continuity correction,
/// two-sided p-value.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64], alpha: f64) -> Result<WilcoxonResult> {
    let r = rank_differences(x, y)?;
    let n = r.doubled.len() as f64;
    let w_plus = r.doubled.iter().zip(&r.positive).filter(|(_, p)| **p).map(|(d, _)| *d as f64).sum::<f64>() / 2.0;
    let w_minus = n * (n + 1.0) / 2.0 - w_plus;
    let mean = n * (n + 1.0) / 4.0;
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - r.tie_term / 48.0;
    if var <= 0.0 {
        return Err(Error::UndefinedTest("signed-rank variance is zero".into()));
    }
    let z = (w_plus - mean) / var.sqrt();
    let p_value = erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0);
    Ok(WilcoxonResult {
        statistic: w_plus.min(w_minus),
        w_plus,
        w_minus,
        z,
        p_value,
        exact_p_value: (r.doubled.len() <= EXACT_MAX_N).then(|| exact_p(&r)),
        n_effective: r.doubled.len(),
        alpha,
        reject: p_value < alpha,
    })
}

/// Exact two-sided p-value under the sign-flip null, using the same
/// mid-ranks as [`wilcoxon_signed_rank`]: the probability over all `2^n`
/// sign assignments that `|W+ - n(n+1)/4|` is at least the observed value.
pub fn wilcoxon_exact_p(x: &[f64], y: &[f64]) -> Result<f64> {
    Ok(exact_p(&rank_differences(x, y)?))
}

fn exact_p(r: &Ranked) -> f64 {
    let total: u64 = r.doubled.iter().sum();
    // counts[s] = number of sign assignments whose doubled W+ equals s
    let mut counts = vec![0f64; total as usize + 1];
    counts[0] = 1.0;
    let mut reach = 0usize;
    for &v in &r.doubled {
        let v = v as usize;
        for s in (0..=reach).rev() {
            if counts[s] > 0.0 {
                counts[s + v] += counts[s];
            }
        }
        reach += v;
    }
    let observed: u64 = r.doubled.iter().zip(&r.positive).filter(|(_, p)| **p).map(|(d, _)| *d).sum();
    // 2s - total is four times W+ - n(n+1)/4, kept in integers
    let dev = |s: u64| (2 * s as i64 - total as i64).unsigned_abs();
    let cut = dev(observed);
    let hits: f64 = counts.iter().enumerate().filter(|(s, _)| dev(*s as u64) >= cut).map(|(_, c)| *c).sum();
    (hits / 2f64.powi(r.doubled.len() as i32)).min(1.0)
}
