//! Bounded-rational creator decisions: trust-gated suggestion following,
//! fallback creation policies, and click-driven trust dynamics.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{FallbackKind, RunConfig};
use crate::ecosystem::{CreatorRecord, GenreId, HistoryEntry};
use crate::sampling::{bernoulli, sample_index, softmax};
use crate::signaling::SuggestionId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreatorDecision {
    pub genre: GenreId,
    /// True iff a suggestion was given and the trust gate accepted it.
    pub followed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfdState {
    pub genre_logits: Vec<f64>,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimuLineState {
    /// Clicks per genre received in the previous round.
    pub clicks: Vec<f64>,
    pub alpha: f64,
}

/// Per-creator state carried by the fallback model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum FallbackState {
    RandomHistory,
    MostHistoryClick,
    Cfd(CfdState),
    Simuline(SimuLineState),
}

impl FallbackState {
    /// Initial state for `kind`, seeded from the creator's starting history.
    pub fn initial(kind: FallbackKind, history: &[HistoryEntry], config: &RunConfig) -> Self {
        let genres = config.population.genres;
        match kind {
            FallbackKind::RandomHistory => FallbackState::RandomHistory,
            FallbackKind::MostHistoryClick => FallbackState::MostHistoryClick,
            FallbackKind::Cfd => {
                let mut genre_logits = vec![0.0; genres];
                for h in history {
                    genre_logits[h.genre.index()] = config.creators.cfd_initial_logit;
                }
                FallbackState::Cfd(CfdState {
                    genre_logits,
                    learning_rate: config.creators.cfd_learning_rate,
                })
            }
            FallbackKind::Simuline => FallbackState::Simuline(SimuLineState {
                clicks: vec![0.0; genres],
                alpha: config.creators.simuline_alpha,
            }),
        }
    }

    pub fn kind(&self) -> FallbackKind {
        match self {
            FallbackState::RandomHistory => FallbackKind::RandomHistory,
            FallbackState::MostHistoryClick => FallbackKind::MostHistoryClick,
            FallbackState::Cfd(_) => FallbackKind::Cfd,
            FallbackState::Simuline(_) => FallbackKind::Simuline,
        }
    }
}

/// One creation decision for an alive, active creator.
///
/// With a suggestion the creator follows with probability `trust_true`;
/// otherwise (and always without a suggestion) the fallback model picks the
/// genre. CFD creators absorb last round's click feedback here whether or not
/// they follow, so each round of feedback is applied exactly once.
pub fn decide<R: Rng + ?Sized>(
    creator: &mut CreatorRecord,
    suggestion: SuggestionId,
    genres: usize,
    rng: &mut R,
) -> CreatorDecision {
    let feedback: Vec<f64> = creator
        .last_round_genre_clicks
        .iter()
        .map(|&c| c as f64)
        .collect();
    if let FallbackState::Cfd(state) = &mut creator.fallback_state {
        absorb_feedback(state, &feedback);
    }

    if let Some(genre) = suggestion.genre() {
        if bernoulli(creator.trust_true, rng) {
            return CreatorDecision {
                genre,
                followed: true,
            };
        }
    }

    let genre = match &creator.fallback_state {
        FallbackState::RandomHistory => fallback_random_history(&creator.history, genres, rng),
        FallbackState::MostHistoryClick => fallback_most_history_click(&creator.history),
        FallbackState::Cfd(state) => sample_cfd(state, rng),
        FallbackState::Simuline(state) => fallback_simuline(state, rng),
    };
    CreatorDecision {
        genre,
        followed: false,
    }
}

/// Uniform over the distinct genres of the creator's history; uniform over
/// the whole catalog when the history is empty.
pub fn fallback_random_history<R: Rng + ?Sized>(
    history: &[HistoryEntry],
    genres: usize,
    rng: &mut R,
) -> GenreId {
    let mut distinct: Vec<usize> = history.iter().map(|h| h.genre.index()).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.is_empty() {
        GenreId(rng.random_range(0..genres))
    } else {
        GenreId(distinct[rng.random_range(0..distinct.len())])
    }
}

/// Genre of the creator's own history with the most summed clicks. Ties and
/// the empty history go to the lowest genre index.
pub fn fallback_most_history_click(history: &[HistoryEntry]) -> GenreId {
    history_argmax(history).unwrap_or(GenreId(0))
}

/// Argmax over per-genre click sums of a history, restricted to genres that
/// appear in it; lowest index wins ties.
pub(crate) fn history_argmax(history: &[HistoryEntry]) -> Option<GenreId> {
    let mut sums: std::collections::BTreeMap<usize, u64> = std::collections::BTreeMap::new();
    for h in history {
        *sums.entry(h.genre.index()).or_default() += h.clicks;
    }
    let mut best: Option<(usize, u64)> = None;
    for (g, c) in sums {
        if best.is_none_or(|(_, bc)| c > bc) {
            best = Some((g, c));
        }
    }
    best.map(|(g, _)| GenreId(g))
}

fn absorb_feedback(state: &mut CfdState, feedback: &[f64]) {
    for (logit, &f) in state.genre_logits.iter_mut().zip(feedback) {
        *logit += state.learning_rate * f;
    }
}

fn sample_cfd<R: Rng + ?Sized>(state: &CfdState, rng: &mut R) -> GenreId {
    GenreId(sample_index(&softmax(&state.genre_logits), rng))
}

/// Logit ascent on last round's per-genre clicks, then a softmax draw.
pub fn fallback_cfd<R: Rng + ?Sized>(
    state: &CfdState,
    last_round_feedback: &[f64],
    rng: &mut R,
) -> (GenreId, CfdState) {
    let mut next = state.clone();
    absorb_feedback(&mut next, last_round_feedback);
    (sample_cfd(&next, rng), next)
}

/// `P(g) = (clicks_g + α) / Σ_h (clicks_h + α)`, uniform when every term is 0.
pub fn simuline_probabilities(state: &SimuLineState) -> Vec<f64> {
    let weights: Vec<f64> = state.clicks.iter().map(|&c| c + state.alpha).collect();
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        weights.into_iter().map(|w| w / total).collect()
    } else {
        let n = state.clicks.len() as f64;
        vec![1.0 / n; state.clicks.len()]
    }
}

pub fn fallback_simuline<R: Rng + ?Sized>(state: &SimuLineState, rng: &mut R) -> GenreId {
    GenreId(sample_index(&simuline_probabilities(state), rng))
}

/// Trust after one round: `trust + (r_curr − r_prev) / r_prev`, clamped to
/// [0, 1]. Unchanged when the creator did not follow or `r_prev` is zero.
pub fn update_trust(trust: f64, followed_this_round: bool, r_prev: u64, r_curr: u64) -> f64 {
    if !followed_this_round || r_prev == 0 {
        return trust;
    }
    let delta = (r_curr as f64 - r_prev as f64) / r_prev as f64;
    (trust + delta).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ecosystem::{CreatorId, ItemId};
    use crate::rng::{stream_rng, Stream};
    use proptest::prelude::*;

    fn creator(trust: f64, history: &[(usize, u64)], fallback: FallbackState) -> CreatorRecord {
        CreatorRecord {
            id: CreatorId(0),
            trust_true: trust,
            activity_prob: 1.0,
            history: history
                .iter()
                .enumerate()
                .map(|(i, &(g, c))| HistoryEntry {
                    item: ItemId(i),
                    genre: GenreId(g),
                    clicks: c,
                })
                .collect(),
            zero_click_streak: 0,
            alive: true,
            fallback_model: fallback.kind(),
            fallback_state: fallback,
            last_round_clicks: 0,
            last_round_genre_clicks: vec![0; 5],
        }
    }

    fn freq<F: FnMut() -> usize>(n: usize, bins: usize, mut f: F) -> Vec<f64> {
        let mut counts = vec![0usize; bins];
        for _ in 0..n {
            counts[f()] += 1;
        }
        counts.into_iter().map(|c| c as f64 / n as f64).collect()
    }

    #[test]
    fn full_trust_always_follows() {
        let mut rng = stream_rng(1, Stream::CreatorDecision);
        let mut c = creator(1.0, &[(0, 0)], FallbackState::RandomHistory);
        for _ in 0..100 {
            let d = decide(&mut c, SuggestionId::for_genre(GenreId(3)), 5, &mut rng);
            assert_eq!(d, CreatorDecision { genre: GenreId(3), followed: true });
        }
    }

    #[test]
    fn zero_trust_never_follows() {
        let mut rng = stream_rng(2, Stream::CreatorDecision);
        let mut c = creator(0.0, &[(1, 0)], FallbackState::RandomHistory);
        for _ in 0..100 {
            let d = decide(&mut c, SuggestionId::for_genre(GenreId(3)), 5, &mut rng);
            assert!(!d.followed);
            assert_eq!(d.genre, GenreId(1));
        }
    }

    #[test]
    fn follow_frequency_matches_trust() {
        let mut rng = stream_rng(3, Stream::CreatorDecision);
        let mut c = creator(0.6, &[(0, 0)], FallbackState::RandomHistory);
        let n = 10_000;
        let follows = (0..n)
            .filter(|_| decide(&mut c, SuggestionId::for_genre(GenreId(2)), 5, &mut rng).followed)
            .count();
        let rate = follows as f64 / n as f64;
        assert!((rate - 0.6).abs() <= 0.02, "follow rate {rate}");
    }

    #[test]
    fn random_history_single_genre() {
        let mut rng = stream_rng(4, Stream::CreatorDecision);
        let h = creator(0.0, &[(1, 0), (1, 4)], FallbackState::RandomHistory).history;
        for _ in 0..100 {
            assert_eq!(fallback_random_history(&h, 5, &mut rng), GenreId(1));
        }
    }

    #[test]
    fn random_history_two_genres_uniform() {
        let mut rng = stream_rng(5, Stream::CreatorDecision);
        // genre 0 appears three times, genre 2 once: still uniform over distinct genres
        let h = creator(0.0, &[(0, 0), (0, 0), (0, 0), (2, 0)], FallbackState::RandomHistory).history;
        let p = freq(10_000, 5, || fallback_random_history(&h, 5, &mut rng).index());
        assert!((p[0] - 0.5).abs() <= 0.02 && (p[2] - 0.5).abs() <= 0.02, "{p:?}");
    }

    #[test]
    fn random_history_empty_is_uniform() {
        let mut rng = stream_rng(6, Stream::CreatorDecision);
        let p = freq(10_000, 4, || fallback_random_history(&[], 4, &mut rng).index());
        for pi in p {
            assert!((pi - 0.25).abs() <= 0.02);
        }
    }

    #[test]
    fn most_history_click_argmax_and_ties() {
        let h = creator(0.0, &[(1, 5), (2, 9)], FallbackState::MostHistoryClick).history;
        assert_eq!(fallback_most_history_click(&h), GenreId(2));
        let h = creator(0.0, &[(3, 5), (0, 5)], FallbackState::MostHistoryClick).history;
        assert_eq!(fallback_most_history_click(&h), GenreId(0));
        assert_eq!(fallback_most_history_click(&[]), GenreId(0));
        // sums across items of the same genre
        let h = creator(0.0, &[(1, 4), (2, 6), (1, 4)], FallbackState::MostHistoryClick).history;
        assert_eq!(fallback_most_history_click(&h), GenreId(1));
    }

    #[test]
    fn cfd_zero_lr_uniform() {
        let mut rng = stream_rng(7, Stream::CreatorDecision);
        let state = CfdState { genre_logits: vec![0.0; 4], learning_rate: 0.0 };
        let p = freq(10_000, 4, || fallback_cfd(&state, &[3.0, 0.0, 1.0, 0.0], &mut rng).0.index());
        for pi in p {
            assert!((pi - 0.25).abs() <= 0.02, "{pi}");
        }
    }

    #[test]
    fn cfd_logit_ascent_closed_form() {
        let mut rng = stream_rng(8, Stream::CreatorDecision);
        let state = CfdState { genre_logits: vec![0.0, 0.0], learning_rate: 0.5 };
        let (_, next) = fallback_cfd(&state, &[10.0, 0.0], &mut rng);
        assert_eq!(next.genre_logits, vec![5.0, 0.0]);
        let p0 = softmax(&next.genre_logits)[0];
        let expected = 5f64.exp() / (5f64.exp() + 1.0);
        assert!((p0 - expected).abs() < 1e-12);
        assert!((p0 - 0.9933).abs() < 1e-4);
    }

    #[test]
    fn cfd_zero_feedback_keeps_logits() {
        let mut rng = stream_rng(9, Stream::CreatorDecision);
        let state = CfdState { genre_logits: vec![0.3, -1.0, 2.0], learning_rate: 0.1 };
        let (_, next) = fallback_cfd(&state, &[0.0; 3], &mut rng);
        assert_eq!(next, state);
    }

    /// Two-sample Kolmogorov–Smirnov distance between CFD draws at lr 0 and a
    /// fixed softmax sampler on the same logits.
    #[test]
    fn cfd_zero_lr_matches_fixed_softmax_ks() {
        let logits = vec![0.5, -0.2, 1.1, 0.0];
        let state = CfdState { genre_logits: logits.clone(), learning_rate: 0.0 };
        let mut rng_a = stream_rng(10, Stream::CreatorDecision);
        let mut rng_b = stream_rng(11, Stream::CreatorDecision);
        let n = 10_000;
        let a = freq(n, 4, || fallback_cfd(&state, &[5.0, 1.0, 0.0, 2.0], &mut rng_a).0.index());
        let probs = softmax(&logits);
        let b = freq(n, 4, || sample_index(&probs, &mut rng_b));
        let (mut ca, mut cb, mut d) = (0.0, 0.0, 0.0f64);
        for g in 0..4 {
            ca += a[g];
            cb += b[g];
            d = d.max((ca - cb).abs());
        }
        // critical value at alpha = 0.001 for equal sample sizes
        let crit = 1.95 * (2.0 / n as f64).sqrt();
        assert!(d < crit, "KS distance {d} >= {crit}");
    }

    #[test]
    fn simuline_closed_forms() {
        let p = simuline_probabilities(&SimuLineState { clicks: vec![9.0, 1.0], alpha: 0.0 });
        assert!((p[0] - 0.9).abs() < 1e-12);
        let p = simuline_probabilities(&SimuLineState { clicks: vec![0.0; 5], alpha: 1.0 });
        assert!(p.iter().all(|&x| (x - 0.2).abs() < 1e-12));
        let p = simuline_probabilities(&SimuLineState { clicks: vec![3.0, 1.0], alpha: 1.0 });
        assert!((p[0] - 4.0 / 6.0).abs() < 1e-12);
        let p = simuline_probabilities(&SimuLineState { clicks: vec![0.0; 4], alpha: 0.0 });
        assert!(p.iter().all(|&x| (x - 0.25).abs() < 1e-12));
    }

    #[test]
    fn trust_update_examples() {
        assert_eq!(update_trust(0.5, true, 10, 15), 1.0);
        assert_eq!(update_trust(0.5, true, 10, 10), 0.5);
        assert_eq!(update_trust(0.5, true, 0, 10), 0.5);
        assert_eq!(update_trust(0.5, false, 10, 0), 0.5);
        assert_eq!(update_trust(0.5, true, 10, 2), 0.0);
        assert!((update_trust(0.5, true, 10, 9) - 0.4).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn trust_stays_in_unit_interval(
            start in 0.0f64..=1.0,
            steps in prop::collection::vec((any::<bool>(), 0u64..50, 0u64..50), 0..40),
        ) {
            let mut t = start;
            for (followed, prev, curr) in steps {
                t = update_trust(t, followed, prev, curr);
                prop_assert!((0.0..=1.0).contains(&t));
            }
        }

        #[test]
        fn null_suggestion_never_followed(trust in 0.0f64..=1.0, seed in any::<u64>()) {
            let mut rng = stream_rng(seed, Stream::CreatorDecision);
            let mut c = creator(trust, &[(2, 1)], FallbackState::RandomHistory);
            let d = decide(&mut c, SuggestionId::NONE, 5, &mut rng);
            prop_assert!(!d.followed);
        }

        #[test]
        fn fallbacks_return_valid_genres(
            seed in any::<u64>(),
            hist in prop::collection::vec((0usize..6, 0u64..20), 0..8),
            logits in prop::collection::vec(-5.0f64..5.0, 6),
            clicks in prop::collection::vec(0.0f64..30.0, 6),
        ) {
            let mut rng = stream_rng(seed, Stream::CreatorDecision);
            let h = creator(0.0, &hist, FallbackState::RandomHistory).history;
            prop_assert!(fallback_random_history(&h, 6, &mut rng).index() < 6);
            prop_assert!(fallback_most_history_click(&h).index() < 6);
            let cfd = CfdState { genre_logits: logits, learning_rate: 0.1 };
            prop_assert!(fallback_cfd(&cfd, &clicks, &mut rng).0.index() < 6);
            let sl = SimuLineState { clicks: clicks.clone(), alpha: 1.0 };
            prop_assert!(fallback_simuline(&sl, &mut rng).index() < 6);
        }

        #[test]
        fn simuline_probabilities_sum_to_one(
            clicks in prop::collection::vec(0.0f64..100.0, 1..10),
            alpha in 0.001f64..5.0,
        ) {
            let p = simuline_probabilities(&SimuLineState { clicks, alpha });
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
