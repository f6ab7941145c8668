//! Maximum-likelihood estimation of creators' trust from follow/ignore events.
//!
//! Each creator owns one free logit; the predicted trust is its logistic.
//! Minimizing binary cross-entropy with independent per-creator parameters
//! is exactly the per-creator Bernoulli MLE, so the estimate tends to the
//! empirical follow rate.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ecosystem::{CreatorId, FollowObservation};
use crate::error::{Error, Result};
use crate::sampling::logistic;

pub const PRIOR: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FollowRecord {
    pub creator: CreatorId,
    pub round: u32,
    pub followed: bool,
}

/// Only rounds where a non-null suggestion reached an active creator
/// contribute records.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FollowDataset {
    pub records: Vec<FollowRecord>,
}

impl FollowDataset {
    pub fn push_round(&mut self, round: u32, follows: &[FollowObservation]) {
        self.records.extend(follows.iter().map(|f| FollowRecord {
            creator: f.creator,
            round,
            followed: f.followed,
        }));
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn write_csv(&self, path: &Path, provenance: &str) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(out, "# {provenance}").map_err(io)?;
        writeln!(out, "creator_id,round,followed").map_err(io)?;
        for r in &self.records {
            writeln!(out, "{},{},{}", r.creator, r.round, r.followed as u8).map_err(io)?;
        }
        out.flush().map_err(io)
    }

    /// Weighted (observations, follows) per creator. Record weights decay
    /// with age when `decay` is `(now, half_life)`.
    pub fn sufficient_stats(&self, creators: usize, decay: Option<(u32, f64)>) -> Vec<(f64, f64)> {
        let mut stats = vec![(0.0, 0.0); creators];
        for r in &self.records {
            let Some(s) = stats.get_mut(r.creator.index()) else {
                continue;
            };
            let w = match decay {
                Some((now, half_life)) => 0.5f64.powf(now.saturating_sub(r.round) as f64 / half_life),
                None => 1.0,
            };
            s.0 += w;
            if r.followed {
                s.1 += w;
            }
        }
        stats
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustParams {
    pub logits: Vec<f64>,
}

impl TrustParams {
    /// Zero logits: every creator starts at the 0.5 prior.
    pub fn new(creators: usize) -> Self {
        Self {
            logits: vec![0.0; creators],
        }
    }

    pub fn predict(&self, creator: CreatorId) -> f64 {
        self.logits.get(creator.index()).map_or(PRIOR, |&l| logistic(l))
    }

    pub fn predict_all(&self) -> Vec<f64> {
        self.logits.iter().map(|&l| logistic(l)).collect()
    }
}

/// Summed BCE over creators given weighted sufficient statistics.
pub fn bce_loss(params: &TrustParams, stats: &[(f64, f64)]) -> f64 {
    params
        .logits
        .iter()
        .zip(stats)
        .map(|(&l, &(n, k))| {
            // -[k log σ(l) + (n-k) log(1-σ(l))], written with softplus for stability
            k * softplus(-l) + (n - k) * softplus(l)
        })
        .sum()
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Gradient of `bce_loss` with respect to each logit: `n·σ(l) − k`.
pub fn bce_gradient(params: &TrustParams, stats: &[(f64, f64)]) -> Vec<f64> {
    params
        .logits
        .iter()
        .zip(stats)
        .map(|(&l, &(n, k))| n * logistic(l) - k)
        .collect()
}

fn descend(params: &mut TrustParams, stats: &[(f64, f64)], steps: usize, lr: f64) {
    for _ in 0..steps {
        let grad = bce_gradient(params, stats);
        for ((l, g), &(n, _)) in params.logits.iter_mut().zip(grad).zip(stats) {
            // per-creator step scaled by its observation weight
            *l -= lr * g / n.max(1.0);
        }
    }
}

/// Batch fit: `epochs` gradient steps on the dataset's BCE.
pub fn fit(dataset: &FollowDataset, params: &TrustParams, epochs: usize, lr: f64) -> TrustParams {
    let stats = dataset.sufficient_stats(params.logits.len(), None);
    let mut out = params.clone();
    descend(&mut out, &stats, epochs, lr);
    out
}

/// Online estimator refit every round on the growing dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustEstimator {
    pub params: TrustParams,
    pub dataset: FollowDataset,
    /// Running weighted (observations, follows) per creator.
    stats: Vec<(f64, f64)>,
    lr: f64,
    steps_per_round: usize,
    /// Per-round multiplicative decay of old records; 1 disables it.
    decay: f64,
}

impl TrustEstimator {
    pub fn new(creators: usize, lr: f64, steps_per_round: usize, half_life: Option<f64>) -> Self {
        Self {
            params: TrustParams::new(creators),
            dataset: FollowDataset::default(),
            stats: vec![(0.0, 0.0); creators],
            lr,
            steps_per_round,
            decay: half_life.map_or(1.0, |h| 0.5f64.powf(1.0 / h)),
        }
    }

    /// Adds one round of follow observations and takes the round's gradient
    /// steps.
    pub fn update(&mut self, round: u32, follows: &[FollowObservation]) {
        if self.decay < 1.0 {
            for s in &mut self.stats {
                s.0 *= self.decay;
                s.1 *= self.decay;
            }
        }
        for f in follows {
            if let Some(s) = self.stats.get_mut(f.creator.index()) {
                s.0 += 1.0;
                if f.followed {
                    s.1 += 1.0;
                }
            }
        }
        self.dataset.push_round(round, follows);
        descend(&mut self.params, &self.stats, self.steps_per_round, self.lr);
    }

    pub fn estimates(&self) -> Vec<f64> {
        self.params.predict_all()
    }

    pub fn predict(&self, creator: CreatorId) -> f64 {
        self.params.predict(creator)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dataset(rows: &[(usize, usize, usize)]) -> FollowDataset {
        // (creator, follows, total)
        let mut d = FollowDataset::default();
        for &(c, k, n) in rows {
            for i in 0..n {
                d.records.push(FollowRecord { creator: CreatorId(c), round: i as u32, followed: i < k });
            }
        }
        d
    }

    #[test]
    fn seven_of_ten() {
        let p = fit(&dataset(&[(0, 7, 10)]), &TrustParams::new(1), 2000, 1.0);
        assert!((p.predict(CreatorId(0)) - 0.7).abs() <= 0.02);
    }

    #[test]
    fn unobserved_creator_stays_at_prior() {
        let p = fit(&dataset(&[(0, 7, 10)]), &TrustParams::new(2), 2000, 1.0);
        assert_eq!(p.predict(CreatorId(1)), 0.5);
        assert_eq!(p.predict(CreatorId(99)), 0.5);
    }

    #[test]
    fn all_follow_saturates_below_one() {
        let p = fit(&dataset(&[(0, 50, 50)]), &TrustParams::new(1), 2000, 1.0);
        let d = p.predict(CreatorId(0));
        assert!(d > 0.9 && d < 1.0);
        let p = fit(&dataset(&[(0, 100, 100)]), &TrustParams::new(1), 2000, 1.0);
        assert!(p.predict(CreatorId(0)) > 0.95);
    }

    #[test]
    fn fresh_params_predict_half() {
        assert!(TrustParams::new(4).predict_all().iter().all(|&d| d == 0.5));
    }

    #[test]
    fn identical_datasets_identical_estimates() {
        let p = fit(&dataset(&[(0, 3, 8), (1, 3, 8)]), &TrustParams::new(2), 500, 1.0);
        assert_eq!(p.predict(CreatorId(0)), p.predict(CreatorId(1)));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let params = TrustParams { logits: vec![0.3, -1.2, 2.0] };
        let stats = vec![(10.0, 7.0), (4.0, 0.0), (3.5, 3.0)];
        let g = bce_gradient(&params, &stats);
        let h = 1e-6;
        for i in 0..3 {
            let mut plus = params.clone();
            plus.logits[i] += h;
            let mut minus = params.clone();
            minus.logits[i] -= h;
            let fd = (bce_loss(&plus, &stats) - bce_loss(&minus, &stats)) / (2.0 * h);
            assert!((fd - g[i]).abs() / g[i].abs().max(1e-6) < 1e-4, "{i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn online_estimator_tracks_rate_and_decays() {
        let mut est = TrustEstimator::new(1, 1.0, 5, None);
        for r in 0..200 {
            est.update(r, &[FollowObservation { creator: CreatorId(0), followed: r % 4 != 0 }]);
        }
        assert!((est.predict(CreatorId(0)) - 0.75).abs() < 0.02);

        let mut est = TrustEstimator::new(1, 1.0, 5, Some(20.0));
        for r in 0..200 {
            est.update(r, &[FollowObservation { creator: CreatorId(0), followed: r < 100 }]);
        }
        // old follows have decayed away
        assert!(est.predict(CreatorId(0)) < 0.1);
    }

    proptest! {
        #[test]
        fn converges_to_bernoulli_mle(n in 1usize..=100, frac in 0.05f64..0.95) {
            let k = ((n as f64) * frac).round() as usize;
            prop_assume!(k > 0 && k < n);
            let p = fit(&dataset(&[(0, k, n)]), &TrustParams::new(1), 3000, 1.0);
            prop_assert!((p.predict(CreatorId(0)) - k as f64 / n as f64).abs() < 1e-3);
        }

        #[test]
        fn record_order_irrelevant(seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let d = dataset(&[(0, 4, 9), (1, 6, 7), (2, 1, 5)]);
            let mut shuffled = d.clone();
            shuffled.records.shuffle(&mut crate::rng::stream_rng(seed, crate::rng::Stream::Init));
            let a = fit(&d, &TrustParams::new(3), 300, 1.0);
            let b = fit(&shuffled, &TrustParams::new(3), 300, 1.0);
            prop_assert_eq!(a, b);
        }
    }
}
