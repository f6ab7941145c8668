//! The platform's suggestion set and the non-learned signaling strategies.

use serde::{Deserialize, Serialize};

use crate::creator::history_argmax;
use crate::ecosystem::{CreatorRecord, GenreId, Item};

/// `0` is "no suggestion"; `i ≥ 1` asks the creator for genre `i − 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SuggestionId(pub usize);

impl SuggestionId {
    pub const NONE: SuggestionId = SuggestionId(0);

    pub fn for_genre(genre: GenreId) -> Self {
        SuggestionId(genre.index() + 1)
    }

    pub fn genre(self) -> Option<GenreId> {
        self.0.checked_sub(1).map(GenreId)
    }

    pub fn is_none(self) -> bool {
        self.0 == 0
    }
}

/// One suggestion per creator; length is fixed for a run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PlatformAction(pub Vec<SuggestionId>);

impl PlatformAction {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, creator: usize) -> SuggestionId {
        self.0[creator]
    }

    pub fn iter(&self) -> impl Iterator<Item = SuggestionId> + '_ {
        self.0.iter().copied()
    }
}

pub fn no_signal(creators: usize) -> PlatformAction {
    PlatformAction(vec![SuggestionId::NONE; creators])
}

/// Cumulative clicks per genre over the whole corpus.
pub fn genre_click_totals(corpus: &[Item], genres: usize) -> Vec<u64> {
    let mut totals = vec![0u64; genres];
    for item in corpus {
        totals[item.genre.index()] += item.total_clicks;
    }
    totals
}

/// Everyone is told to make the globally most-clicked genre. No clicks yet
/// means no suggestion; ties go to the lowest genre.
pub fn most_click(genre_clicks: &[u64], creators: usize) -> PlatformAction {
    let mut best: Option<(usize, u64)> = None;
    for (g, &c) in genre_clicks.iter().enumerate() {
        if c > 0 && best.is_none_or(|(_, bc)| c > bc) {
            best = Some((g, c));
        }
    }
    let s = best.map_or(SuggestionId::NONE, |(g, _)| SuggestionId::for_genre(GenreId(g)));
    PlatformAction(vec![s; creators])
}

/// Each creator is told to make the genre that earned it the most clicks;
/// empty histories get no suggestion.
pub fn most_history_click(creators: &[CreatorRecord]) -> PlatformAction {
    PlatformAction(
        creators
            .iter()
            .map(|c| history_argmax(&c.history).map_or(SuggestionId::NONE, SuggestionId::for_genre))
            .collect(),
    )
}
