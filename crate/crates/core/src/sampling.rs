//! Small sampling and activation helpers shared across modules.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use statrs::distribution::{ContinuousCDF, Normal as NormalCdf};

use crate::error::{Error, Result};

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Draws an index with probability proportional to `weights` using a single
/// uniform draw. Weights must be nonnegative with a positive sum.
pub fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    debug_assert!(total > 0.0, "weights must have positive mass");
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            last_positive = i;
            acc += w;
            if target < acc {
                return i;
            }
        }
    }
    last_positive
}

pub fn bernoulli<R: Rng + ?Sized>(p: f64, rng: &mut R) -> bool {
    rng.random::<f64>() < p
}

/// Rejection sampler for a normal distribution truncated to `[lo, hi]`.
///
/// `sigma` is the standard deviation of the parent normal.
pub fn sample_truncated_gaussian<R: Rng + ?Sized>(
    mu: f64,
    sigma: f64,
    lo: f64,
    hi: f64,
    rng: &mut R,
) -> Result<f64> {
    let acceptance = truncated_mass(mu, sigma, lo, hi)?;
    if acceptance < 1e-6 {
        return Err(Error::Acceptance(acceptance));
    }
    let normal = Normal::new(mu, sigma).map_err(|e| Error::config(e.to_string()))?;
    loop {
        let x = normal.sample(rng);
        if (lo..=hi).contains(&x) {
            return Ok(x);
        }
    }
}

/// Probability mass of `Normal(mu, sigma)` inside `[lo, hi]`.
pub fn truncated_mass(mu: f64, sigma: f64, lo: f64, hi: f64) -> Result<f64> {
    if !(lo < hi) || !(sigma > 0.0) || !mu.is_finite() {
        return Err(Error::config(format!(
            "truncated normal needs lo < hi and sigma > 0 (got lo={lo}, hi={hi}, sigma={sigma})"
        )));
    }
    let n = NormalCdf::new(mu, sigma).map_err(|e| Error::config(e.to_string()))?;
    Ok(n.cdf(hi) - n.cdf(lo))
}
