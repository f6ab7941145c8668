//! Welfare and ecosystem-health measurements over round events.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::ecosystem::{CreatorRecord, RoundEvent};
use crate::error::{Error, Result};

/// Prefix sums of per-round rewards.
pub fn cumulative_clicks(events: &[RoundEvent]) -> Vec<u64> {
    events
        .iter()
        .scan(0u64, |acc, e| {
            *acc += e.reward;
            Some(*acc)
        })
        .collect()
}

/// Shannon entropy in bits of a genre histogram, with `0·log 0 = 0`.
pub fn diversity(genre_counts: &[u64]) -> Result<f64> {
    let total: u64 = genre_counts.iter().sum();
    if total == 0 {
        return Err(Error::EmptyHistogram);
    }
    let total = total as f64;
    Ok(genre_counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            p * (1.0 / p).log2()
        })
        .sum())
}

/// Genre histogram of the items created in `events`.
pub fn created_genre_counts(events: &[RoundEvent], genres: usize) -> Vec<u64> {
    let mut counts = vec![0u64; genres];
    for e in events {
        for c in &e.created {
            counts[c.genre.index()] += 1;
        }
    }
    counts
}

/// Mean over rounds of the number of creators that created in the round.
pub fn active_creators(events: &[RoundEvent]) -> f64 {
    if events.is_empty() {
        return 0.0;
    }
    let total: usize = events.iter().map(|e| e.created.len()).sum();
    total as f64 / events.len() as f64
}

/// Distinct genres in each creator's history, by creator index.
pub fn genres_per_creator(creators: &[CreatorRecord]) -> Vec<usize> {
    creators
        .iter()
        .map(|c| c.history_genres().map(|g| g.index()).collect::<BTreeSet<_>>().len())
        .collect()
}

/// One row of the per-round metrics CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub round: u32,
    pub reward: u64,
    pub cumulative_clicks: u64,
    pub diversity_so_far: f64,
    pub active_creators: usize,
    pub mean_trust_estimate: f64,
    pub follow_rate: f64,
}

/// Builds metrics rows incrementally as rounds complete.
#[derive(Debug, Clone)]
pub struct MetricsTracker {
    genre_counts: Vec<u64>,
    cumulative: u64,
    pub rows: Vec<MetricsRow>,
}

impl MetricsTracker {
    pub fn new(genres: usize) -> Self {
        Self {
            genre_counts: vec![0; genres],
            cumulative: 0,
            rows: Vec::new(),
        }
    }

    pub fn record(&mut self, event: &RoundEvent, trust_estimates: &[f64]) -> &MetricsRow {
        for c in &event.created {
            self.genre_counts[c.genre.index()] += 1;
        }
        self.cumulative += event.reward;
        let suggested = event.created.iter().filter(|c| !c.suggested.is_none()).count();
        let followed = event.created.iter().filter(|c| c.followed).count();
        let mean_trust = if trust_estimates.is_empty() {
            0.0
        } else {
            trust_estimates.iter().sum::<f64>() / trust_estimates.len() as f64
        };
        self.rows.push(MetricsRow {
            round: event.round,
            reward: event.reward,
            cumulative_clicks: self.cumulative,
            diversity_so_far: diversity(&self.genre_counts).unwrap_or(0.0),
            active_creators: event.created.len(),
            mean_trust_estimate: mean_trust,
            follow_rate: if suggested == 0 { 0.0 } else { followed as f64 / suggested as f64 },
        });
        self.rows.last().expect("row just pushed")
    }

    pub fn genre_counts(&self) -> &[u64] {
        &self.genre_counts
    }
}

/// Headline numbers of one evaluated run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub final_clicks: u64,
    pub diversity: f64,
    pub active_creators: f64,
}

impl RunSummary {
    pub fn from_events(events: &[RoundEvent], genres: usize) -> Self {
        Self {
            final_clicks: cumulative_clicks(events).last().copied().unwrap_or(0),
            diversity: diversity(&created_genre_counts(events, genres)).unwrap_or(0.0),
            active_creators: active_creators(events),
        }
    }
}
