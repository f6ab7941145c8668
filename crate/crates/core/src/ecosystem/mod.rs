//! World state and the interaction round:
//! suggestions → creations → recommendations → clicks → bookkeeping.

mod events;
mod types;

pub use events::{read_event_log, ClickEvent, CreatedEvent, EventLogWriter, RoundEvent, Snapshot, SNAPSHOT_VERSION};
pub use types::*;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rand_chacha::ChaCha8Rng;

use crate::audience::{generate_population, load_affinity_csv, sample_activity, sample_clicks};
use crate::config::{RecommenderKind, RunConfig, TrustUpdateRule};
use crate::creator::{decide, update_trust, FallbackState};
use crate::error::{Error, Result};
use crate::recommender::{min_exposure_rerank, train_mf, Recommender, ScoredItem};
use crate::rng::{stream_rng, RngStreams, Stream};
use crate::sampling::{bernoulli, sample_truncated_gaussian};
use crate::signaling::PlatformAction;

/// The platform's view of the world after a round: the genre each creator
/// produced (`None` when it did not create) and the predicted trust vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub created: Vec<Option<GenreId>>,
    pub trust: Vec<f64>,
}

/// Whether a creator that received a non-null suggestion followed it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FollowObservation {
    pub creator: CreatorId,
    pub followed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    /// Total clicks this round.
    pub reward: u64,
    pub follows: Vec<FollowObservation>,
    pub event: RoundEvent,
}

#[derive(Debug, Clone)]
pub struct EcosystemState {
    pub round: u32,
    pub config: RunConfig,
    pub creators: Vec<CreatorRecord>,
    pub users: Vec<UserRecord>,
    pub corpus: Vec<Item>,
    pub click_log: ClickLog,
    pub recommender: Recommender,
    /// Genre created by each creator in the last finished round.
    pub last_created: Vec<Option<GenreId>>,
    pub rng: RngStreams,
}

impl EcosystemState {
    /// Builds a fresh world from `config` with all randomness derived from
    /// `seed`.
    pub fn new(config: &RunConfig, seed: u64) -> Result<Self> {
        Self::with_dynamics(config, seed, seed)
    }

    /// Builds the population from `world_seed` and seeds the per-round
    /// streams from `dynamics_seed`, so one world can be replayed under
    /// independent round-to-round randomness.
    pub fn with_dynamics(config: &RunConfig, world_seed: u64, dynamics_seed: u64) -> Result<Self> {
        config.validate()?;
        let mut init = stream_rng(world_seed, Stream::Init);
        let genres = config.population.genres;
        let (g_lo, g_hi) = config
            .creators
            .initial_genres
            .map_or((0, genres), |[lo, hi]| (lo, hi));
        let quality = Normal::new(0.0, config.audience.quality_std)
            .map_err(|e| Error::config(e.to_string()))?;

        let mut corpus = Vec::new();
        let mut creators = Vec::with_capacity(config.population.creators);
        for c in 0..config.population.creators {
            let trust_true =
                sample_truncated_gaussian(config.trust.mean, config.trust.std, 0.0, 1.0, &mut init)?;
            let activity_prob = sample_activity(&config.creators.activity, &mut init);
            let mut history = Vec::with_capacity(config.simulation.initial_history);
            for slot in 0..config.simulation.initial_history {
                let genre = GenreId(init.random_range(g_lo..g_hi));
                let id = ItemId(corpus.len());
                corpus.push(Item {
                    id,
                    creator: CreatorId(c),
                    genre,
                    round_created: None,
                    total_clicks: 0,
                    impressions: 0,
                    quality: quality.sample(&mut init),
                    history_slot: slot,
                });
                history.push(HistoryEntry {
                    item: id,
                    genre,
                    clicks: 0,
                });
            }
            let fallback_model = config.fallback_for(c);
            let fallback_state = FallbackState::initial(fallback_model, &history, config);
            creators.push(CreatorRecord {
                id: CreatorId(c),
                trust_true,
                activity_prob,
                history,
                zero_click_streak: 0,
                alive: true,
                fallback_model,
                fallback_state,
                last_round_clicks: 0,
                last_round_genre_clicks: vec![0; genres],
            });
        }

        let users = match &config.audience.affinity_csv {
            Some(path) => {
                let users = load_affinity_csv(path, genres)?;
                if users.len() != config.population.users {
                    return Err(Error::config(format!(
                        "{} lists {} users but population.users is {}",
                        path.display(),
                        users.len(),
                        config.population.users
                    )));
                }
                users
            }
            None => generate_population(config.population.users, genres, &config.audience, &mut init)?,
        };

        let last_created = creators
            .iter()
            .map(|c| c.history.last().map(|h| h.genre))
            .collect();

        Ok(Self {
            round: 0,
            recommender: Recommender::new(config.recommender.kind, config.audience.click.clone()),
            config: config.clone(),
            creators,
            users,
            corpus,
            click_log: ClickLog::default(),
            last_created,
            rng: RngStreams::new(dynamics_seed),
        })
    }

    pub fn genres(&self) -> usize {
        self.config.population.genres
    }

    pub fn alive_count(&self) -> usize {
        self.creators.iter().filter(|c| c.alive).count()
    }

    /// Items eligible for recommendation in the current round.
    pub fn candidates(&self) -> Vec<&Item> {
        let window = self.config.simulation.candidate_window;
        self.corpus
            .iter()
            .filter(|item| {
                window == 0 || item.round_created.unwrap_or(0) + window > self.round
            })
            .collect()
    }

    pub fn observe(&self, trust_estimates: &[f64]) -> Observation {
        debug_assert_eq!(trust_estimates.len(), self.creators.len());
        Observation {
            created: self.last_created.clone(),
            trust: trust_estimates.to_vec(),
        }
    }

    /// Runs one interaction round.
    pub fn step(&mut self, action: &PlatformAction) -> Result<StepOutcome> {
        let n_creators = self.creators.len();
        let genres = self.genres();
        if action.len() != n_creators {
            return Err(Error::config(format!(
                "action has {} entries for {} creators",
                action.len(),
                n_creators
            )));
        }
        if let Some(bad) = action.iter().find(|s| s.0 > genres) {
            return Err(Error::config(format!("suggestion {} out of range 0..={genres}", bad.0)));
        }
        let round = self.round;

        // (1) creator activity; one draw per creator keeps the stream aligned
        let creator_active: Vec<bool> = self
            .creators
            .iter()
            .map(|c| bernoulli(c.activity_prob, &mut self.rng.creator_activity))
            .collect();

        // (2) creations
        let quality = Normal::new(0.0, self.config.audience.quality_std)
            .map_err(|e| Error::config(e.to_string()))?;
        let mut created = Vec::new();
        let mut follows = Vec::new();
        for (i, creator) in self.creators.iter_mut().enumerate() {
            if !(creator.alive && creator_active[i]) {
                self.last_created[i] = None;
                continue;
            }
            let suggestion = action.get(i);
            let decision = decide(creator, suggestion, genres, &mut self.rng.creator_decision);
            let id = ItemId(self.corpus.len());
            self.corpus.push(Item {
                id,
                creator: creator.id,
                genre: decision.genre,
                round_created: Some(round),
                total_clicks: 0,
                impressions: 0,
                quality: quality.sample(&mut self.rng.content),
                history_slot: creator.history.len(),
            });
            creator.history.push(HistoryEntry {
                item: id,
                genre: decision.genre,
                clicks: 0,
            });
            self.last_created[i] = Some(decision.genre);
            if !suggestion.is_none() {
                follows.push(FollowObservation {
                    creator: creator.id,
                    followed: decision.followed,
                });
            }
            created.push(CreatedEvent {
                creator: creator.id,
                genre: decision.genre,
                followed: decision.followed,
                suggested: suggestion,
            });
        }

        if self.recommender.kind == RecommenderKind::MfLite
            && round.is_multiple_of(self.config.recommender.mf.retrain_every)
        {
            self.retrain_mf();
        }

        // (3) user activity
        let user_active: Vec<bool> = self
            .users
            .iter()
            .map(|u| bernoulli(u.activity_prob, &mut self.rng.user_activity))
            .collect();

        // (4) recommendations
        let k = self.config.simulation.k;
        let active_users: Vec<usize> = (0..self.users.len()).filter(|&u| user_active[u]).collect();
        let lists: Vec<Vec<ScoredItem>> = {
            let candidates = self.candidates();
            let mut lists: Vec<Vec<ScoredItem>> = active_users
                .iter()
                .map(|&u| self.recommender.recommend_scored(&self.users[u], &candidates, k))
                .collect();
            let guarantee = self.config.recommender.min_exposure;
            if guarantee > 0 {
                let alive: Vec<bool> = self.creators.iter().map(|c| c.alive).collect();
                // an infeasible guarantee leaves the base lists in place
                let _ = min_exposure_rerank(&mut lists, guarantee, &candidates, &alive, |li, item| {
                    self.recommender.score(&self.users[active_users[li]], item)
                });
            }
            lists
        };
        for list in &lists {
            for s in list {
                self.corpus[s.item.index()].impressions += 1;
            }
        }

        // (5) clicks
        let mut creator_clicks = vec![0u64; n_creators];
        let mut creator_genre_clicks = vec![vec![0u64; genres]; n_creators];
        let mut clicks = Vec::new();
        for (li, list) in lists.iter().enumerate() {
            let user = &self.users[active_users[li]];
            let items: Vec<&Item> = list.iter().map(|s| &self.corpus[s.item.index()]).collect();
            let clicked = sample_clicks(user, &items, &self.config.audience.click, &mut self.rng.click);
            for item_id in clicked {
                clicks.push(ClickEvent {
                    user: user.id,
                    item: item_id,
                });
            }
        }
        for ev in &clicks {
            let item = &mut self.corpus[ev.item.index()];
            item.total_clicks += 1;
            let c = item.creator.index();
            self.creators[c].history[item.history_slot].clicks += 1;
            creator_clicks[c] += 1;
            creator_genre_clicks[c][item.genre.index()] += 1;
            self.click_log.records.push(ClickRecord {
                item: ev.item,
                user: ev.user,
                round,
            });
        }
        let reward = clicks.len() as u64;
        self.click_log.per_round.push(reward);

        // (6) churn
        for (i, creator) in self.creators.iter_mut().enumerate() {
            if creator_clicks[i] > 0 {
                creator.zero_click_streak = 0;
            } else if self.last_created[i].is_some() {
                creator.zero_click_streak += 1;
            }
        }
        let departures = self.apply_churn();

        // (7) trust dynamics and per-round feedback
        let dynamic = self.config.trust.dynamic;
        let rule = self.config.trust.update_rule;
        for (i, creator) in self.creators.iter_mut().enumerate() {
            let r_curr = creator_clicks[i];
            if dynamic {
                if let Some(ev) = created.iter().find(|e| e.creator.index() == i) {
                    let apply = match rule {
                        TrustUpdateRule::FollowOnly => ev.followed,
                        TrustUpdateRule::AllSuggested => !ev.suggested.is_none(),
                    };
                    creator.trust_true = update_trust(creator.trust_true, apply, creator.last_round_clicks, r_curr);
                }
            }
            creator.last_round_clicks = r_curr;
            creator.last_round_genre_clicks.clone_from(&creator_genre_clicks[i]);
            if let FallbackState::Simuline(state) = &mut creator.fallback_state {
                for (dst, &src) in state.clicks.iter_mut().zip(&creator_genre_clicks[i]) {
                    *dst = src as f64;
                }
            }
        }

        // (8)
        self.round += 1;

        Ok(StepOutcome {
            reward,
            follows,
            event: RoundEvent {
                round,
                reward,
                created,
                departures,
                clicks,
            },
        })
    }

    /// Marks creators whose zero-click streak reached the threshold as
    /// departed and returns them. Departure is permanent.
    pub fn apply_churn(&mut self) -> Vec<CreatorId> {
        let threshold = self.config.simulation.churn_threshold;
        let mut departed = Vec::new();
        for c in self.creators.iter_mut() {
            if c.alive && c.zero_click_streak >= threshold {
                c.alive = false;
                departed.push(c.id);
            }
        }
        departed
    }

    fn retrain_mf(&mut self) {
        let item_genres: Vec<GenreId> = self.corpus.iter().map(|i| i.genre).collect();
        let model = train_mf(
            &self.click_log.records,
            self.users.len(),
            &item_genres,
            self.genres(),
            &self.config.recommender.mf,
            &mut self.rng.recommender,
        );
        self.recommender.mf = Some(model);
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            version: SNAPSHOT_VERSION,
            round: self.round,
            config: self.config.clone(),
            creators: self.creators.clone(),
            users: self.users.clone(),
            corpus: self.corpus.clone(),
            click_log: self.click_log.clone(),
            recommender: self.recommender.clone(),
            last_created: self.last_created.clone(),
            rng: self.rng.capture(),
        }
    }

    pub fn from_snapshot(snapshot: Snapshot) -> Result<Self> {
        if snapshot.version != SNAPSHOT_VERSION {
            return Err(Error::config(format!(
                "snapshot version {} is not supported (expected {SNAPSHOT_VERSION})",
                snapshot.version
            )));
        }
        Ok(Self {
            round: snapshot.round,
            config: snapshot.config,
            creators: snapshot.creators,
            users: snapshot.users,
            corpus: snapshot.corpus,
            click_log: snapshot.click_log,
            recommender: snapshot.recommender,
            last_created: snapshot.last_created,
            rng: RngStreams::restore(&snapshot.rng),
        })
    }
}

/// Exposes a stream for callers that need a policy RNG tied to the seed.
pub fn policy_rng(seed: u64) -> ChaCha8Rng {
    stream_rng(seed, Stream::Policy)
}

#[cfg(test)]
mod tests;
