use serde::{Deserialize, Serialize};

use crate::config::FallbackKind;
use crate::creator::FallbackState;

macro_rules! index_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub usize);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0
            }
        }

        impl std::fmt::Display for $name {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                self.0.fmt(f)
            }
        }
    };
}

index_type!(GenreId);
index_type!(CreatorId);
index_type!(UserId);
index_type!(ItemId);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub id: ItemId,
    pub creator: CreatorId,
    pub genre: GenreId,
    /// Seed items carry `None`; simulated items the round they were made in.
    pub round_created: Option<u32>,
    pub total_clicks: u64,
    /// Number of recommendation lists the item has appeared in.
    pub impressions: u64,
    pub quality: f64,
    /// Position of this item inside its creator's history.
    pub history_slot: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClickRecord {
    pub item: ItemId,
    pub user: UserId,
    pub round: u32,
}

/// Sparse form of the binary click matrix: at most one record per
/// (item, user, round).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ClickLog {
    pub records: Vec<ClickRecord>,
    pub per_round: Vec<u64>,
}

impl ClickLog {
    pub fn total(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn round_records(&self, round: u32) -> impl Iterator<Item = &ClickRecord> {
        self.records.iter().filter(move |r| r.round == round)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub item: ItemId,
    pub genre: GenreId,
    pub clicks: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreatorRecord {
    pub id: CreatorId,
    /// Ground-truth probability of following a suggestion.
    pub trust_true: f64,
    pub activity_prob: f64,
    pub history: Vec<HistoryEntry>,
    /// Consecutive creation rounds without a single click.
    pub zero_click_streak: u32,
    pub alive: bool,
    pub fallback_model: FallbackKind,
    pub fallback_state: FallbackState,
    /// Clicks on any of this creator's items in the previous round.
    pub last_round_clicks: u64,
    /// Per-genre clicks on this creator's items in the previous round.
    pub last_round_genre_clicks: Vec<u64>,
}

impl CreatorRecord {
    pub fn history_genres(&self) -> impl Iterator<Item = GenreId> + '_ {
        self.history.iter().map(|h| h.genre)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserRecord {
    pub id: UserId,
    pub genre_affinity: Vec<f64>,
    pub activity_prob: f64,
}
