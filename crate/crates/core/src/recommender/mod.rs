//! Platform recommendation policies: score every candidate item for a user
//! and keep the top k.

mod mf;
mod rerank;

pub use mf::{train_mf, MfModel};
pub use rerank::min_exposure_rerank;

use serde::{Deserialize, Serialize};

use crate::audience::click_logit;
use crate::config::{ClickModelParams, RecommenderKind};
use crate::ecosystem::{Item, ItemId, UserRecord};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredItem {
    pub item: ItemId,
    pub score: f64,
}

/// `(clicks + 1) / (impressions + 2)`.
pub fn smoothed_ctr(clicks: u64, impressions: u64) -> f64 {
    (clicks as f64 + 1.0) / (impressions as f64 + 2.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recommender {
    pub kind: RecommenderKind,
    /// Ground-truth click model, used by `oracle_affinity` only.
    pub click: ClickModelParams,
    pub mf: Option<MfModel>,
}

impl Recommender {
    pub fn new(kind: RecommenderKind, click: ClickModelParams) -> Self {
        Self { kind, click, mf: None }
    }

    pub fn score(&self, user: &UserRecord, item: &Item) -> f64 {
        match self.kind {
            // the affinity/quality part of the true click logit
            RecommenderKind::OracleAffinity => click_logit(user, item, &self.click) - self.click.bias,
            RecommenderKind::EmpiricalCtr => smoothed_ctr(item.total_clicks, item.impressions),
            RecommenderKind::Popularity => item.total_clicks as f64,
            RecommenderKind::MfLite => self
                .mf
                .as_ref()
                .map_or(0.0, |m| m.predict(user.id, item.id, item.genre)),
        }
    }

    /// Top-k candidates by score; ties go to the lowest item id.
    pub fn recommend_scored(&self, user: &UserRecord, candidates: &[&Item], k: usize) -> Vec<ScoredItem> {
        let mut scored: Vec<ScoredItem> = candidates
            .iter()
            .map(|item| ScoredItem {
                item: item.id,
                score: self.score(user, item),
            })
            .collect();
        top_k(&mut scored, k);
        scored
    }

    pub fn recommend(&self, user: &UserRecord, candidates: &[&Item], k: usize) -> Vec<ItemId> {
        self.recommend_scored(user, candidates, k)
            .into_iter()
            .map(|s| s.item)
            .collect()
    }
}

fn by_rank(a: &ScoredItem, b: &ScoredItem) -> std::cmp::Ordering {
    b.score.total_cmp(&a.score).then(a.item.cmp(&b.item))
}

fn top_k(scored: &mut Vec<ScoredItem>, k: usize) {
    if scored.len() > k {
        scored.select_nth_unstable_by(k, by_rank);
        scored.truncate(k);
    }
    scored.sort_by(by_rank);
}
