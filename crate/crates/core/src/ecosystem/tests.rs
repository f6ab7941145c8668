use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::*;
use crate::config::{Activity, AffinityGenerator};
use crate::signaling::{no_signal, SuggestionId};

fn small_config(creators: usize, users: usize, genres: usize) -> RunConfig {
    let mut c = RunConfig::default();
    c.population.creators = creators;
    c.population.users = users;
    c.population.genres = genres;
    c
}

fn suggest_all(n: usize, genre: usize) -> PlatformAction {
    PlatformAction(vec![SuggestionId::for_genre(GenreId(genre)); n])
}

#[test]
fn follower_without_users_adds_item() {
    let mut state = EcosystemState::new(&small_config(1, 0, 3), 1).unwrap();
    state.creators[0].activity_prob = 1.0;
    state.creators[0].trust_true = 1.0;
    let before = state.corpus.len();
    let out = state.step(&suggest_all(1, 2)).unwrap();
    assert_eq!(out.reward, 0);
    assert_eq!(state.corpus.len(), before + 1);
    assert_eq!(state.corpus.last().unwrap().genre, GenreId(2));
    assert_eq!(out.follows, vec![FollowObservation { creator: CreatorId(0), followed: true }]);
}

#[test]
fn inactive_creators_change_nothing() {
    let mut state = EcosystemState::new(&small_config(4, 6, 3), 2).unwrap();
    for c in &mut state.creators {
        c.activity_prob = 0.0;
    }
    // seed items alone can still earn clicks, so only the corpus is pinned
    let before = state.corpus.len();
    let out = state.step(&suggest_all(4, 1)).unwrap();
    assert_eq!(state.corpus.len(), before);
    assert!(out.follows.is_empty());
    assert!(out.event.created.is_empty());

    let mut cfg = small_config(4, 6, 3);
    cfg.simulation.initial_history = 0;
    let mut state = EcosystemState::new(&cfg, 2).unwrap();
    for c in &mut state.creators {
        c.activity_prob = 0.0;
    }
    let out = state.step(&suggest_all(4, 1)).unwrap();
    assert_eq!(out.reward, 0);
    assert!(state.corpus.is_empty());
}

#[test]
fn action_length_mismatch_is_config_error() {
    let mut state = EcosystemState::new(&small_config(3, 2, 2), 3).unwrap();
    assert!(matches!(state.step(&no_signal(2)), Err(Error::Config(_))));
    assert!(matches!(state.step(&PlatformAction(vec![SuggestionId(3); 3])), Err(Error::Config(_))));
}

/// Replays one round with independently constructed RNG streams and a
/// from-scratch recommender/click computation.
#[test]
fn one_round_matches_hand_trace() {
    let seed = 17;
    let mut cfg = small_config(3, 5, 2);
    cfg.simulation.k = 2;
    cfg.recommender.kind = RecommenderKind::OracleAffinity;
    let mut state = EcosystemState::new(&cfg, seed).unwrap();
    let activity = [1.0, 0.0, 1.0];
    for (c, p) in state.creators.iter_mut().zip(activity) {
        c.activity_prob = p;
        c.trust_true = 1.0;
    }
    let affinities = [[1.0, 0.0], [0.0, 1.0], [0.5, 0.5], [1.0, 0.2], [0.1, 0.9]];
    for (u, a) in state.users.iter_mut().zip(affinities) {
        u.genre_affinity = a.to_vec();
        u.activity_prob = 0.6;
    }
    let action = PlatformAction(vec![SuggestionId(1), SuggestionId(2), SuggestionId(2)]);

    // oracle
    let mut creator_rng = stream_rng(seed, Stream::CreatorActivity);
    let mut decision_rng = stream_rng(seed, Stream::CreatorDecision);
    let mut content_rng = stream_rng(seed, Stream::Content);
    let mut user_rng = stream_rng(seed, Stream::UserActivity);
    let mut click_rng = stream_rng(seed, Stream::Click);
    let quality = Normal::new(0.0, cfg.audience.quality_std).unwrap();
    // (genre, quality, creator) for every candidate item, in id order
    let mut items: Vec<(usize, f64, usize)> = state.corpus.iter().map(|i| (i.genre.index(), i.quality, i.creator.index())).collect();
    for (c, &p) in activity.iter().enumerate() {
        let active = creator_rng.random::<f64>() < p;
        if active {
            // trust 1: the follow draw always succeeds
            assert!(decision_rng.random::<f64>() < 1.0);
            let genre = action.0[c].0 - 1;
            items.push((genre, quality.sample(&mut content_rng), c));
        }
    }
    let p = &cfg.audience.click;
    let mut expected_clicks = Vec::new();
    for (u, aff) in affinities.iter().enumerate() {
        if !(user_rng.random::<f64>() < 0.6) {
            continue;
        }
        let mut ranked: Vec<(f64, usize)> = items
            .iter()
            .enumerate()
            .map(|(id, &(g, q, _))| (p.affinity_weight * aff[g] + p.quality_weight * q, id))
            .collect();
        ranked.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        for &(score, id) in ranked.iter().take(2) {
            let prob = 1.0 / (1.0 + (-(p.bias + score)).exp());
            if click_rng.random::<f64>() < prob {
                expected_clicks.push((u, id));
            }
        }
    }

    let out = state.step(&action).unwrap();
    let got: Vec<(usize, usize)> = out.event.clicks.iter().map(|c| (c.user.index(), c.item.index())).collect();
    assert_eq!(got, expected_clicks);
    assert_eq!(out.reward as usize, expected_clicks.len());
    assert_eq!(state.corpus.len(), items.len());
}

#[test]
fn churn_after_threshold_creation_rounds() {
    let mut cfg = small_config(1, 0, 2);
    cfg.simulation.churn_threshold = 10;
    let mut state = EcosystemState::new(&cfg, 4).unwrap();
    state.creators[0].activity_prob = 1.0;
    state.creators[0].zero_click_streak = 9;
    let out = state.step(&no_signal(1)).unwrap();
    assert_eq!(state.creators[0].zero_click_streak, 10);
    assert!(!state.creators[0].alive);
    assert_eq!(out.event.departures, vec![CreatorId(0)]);
    // absorbing
    let out = state.step(&no_signal(1)).unwrap();
    assert!(out.event.created.is_empty());
    assert!(!state.creators[0].alive);
}

#[test]
fn inactive_round_keeps_streak() {
    let mut state = EcosystemState::new(&small_config(1, 0, 2), 5).unwrap();
    state.creators[0].activity_prob = 0.0;
    state.creators[0].zero_click_streak = 9;
    state.step(&no_signal(1)).unwrap();
    assert_eq!(state.creators[0].zero_click_streak, 9);
    assert!(state.creators[0].alive);
}

#[test]
fn click_on_old_item_resets_streak() {
    let mut cfg = small_config(1, 1, 2);
    cfg.simulation.k = 1;
    cfg.audience.click.bias = 60.0;
    let mut state = EcosystemState::new(&cfg, 6).unwrap();
    state.creators[0].activity_prob = 0.0;
    state.creators[0].zero_click_streak = 9;
    state.users[0].activity_prob = 1.0;
    let out = state.step(&no_signal(1)).unwrap();
    assert_eq!(out.reward, 1);
    assert_eq!(state.creators[0].zero_click_streak, 0);
    assert!(state.creators[0].alive);
}

#[test]
fn observe_entries() {
    let mut state = EcosystemState::new(&small_config(2, 0, 3), 7).unwrap();
    state.last_created = vec![Some(GenreId(1)), None];
    state.creators[1].alive = false;
    let obs = state.observe(&[0.7, 0.4]);
    assert_eq!(obs.created, vec![Some(GenreId(1)), None]);
    assert_eq!(obs.trust, vec![0.7, 0.4]);
}

fn random_action<R: Rng>(n: usize, genres: usize, rng: &mut R) -> PlatformAction {
    PlatformAction((0..n).map(|_| SuggestionId(rng.random_range(0..=genres))).collect())
}

fn busy_config() -> RunConfig {
    let mut cfg = small_config(8, 12, 4);
    cfg.simulation.churn_threshold = 3;
    cfg.audience.affinity = AffinityGenerator::Favorite { skew: 0.0, pool: Some(2), strength: 1.0, noise: 0.1 };
    cfg.creators.activity = Activity::Uniform { lo: 0.3, hi: 1.0 };
    cfg
}

fn run_events(cfg: &RunConfig, seed: u64, rounds: usize) -> Vec<RoundEvent> {
    let mut state = EcosystemState::new(cfg, seed).unwrap();
    let mut rng = policy_rng(seed);
    (0..rounds)
        .map(|_| {
            let a = random_action(cfg.population.creators, cfg.population.genres, &mut rng);
            state.step(&a).unwrap().event
        })
        .collect()
}

#[test]
fn identical_seeds_identical_events() {
    let cfg = busy_config();
    let a = serde_json::to_string(&run_events(&cfg, 11, 40)).unwrap();
    let b = serde_json::to_string(&run_events(&cfg, 11, 40)).unwrap();
    assert_eq!(a, b);
    let c = serde_json::to_string(&run_events(&cfg, 12, 40)).unwrap();
    assert_ne!(a, c);
}

#[test]
fn round_invariants_hold() {
    for kind in [RecommenderKind::OracleAffinity, RecommenderKind::EmpiricalCtr, RecommenderKind::MfLite, RecommenderKind::Popularity] {
        let mut cfg = busy_config();
        cfg.recommender.kind = kind;
        cfg.recommender.mf.epochs = 2;
        let mut state = EcosystemState::new(&cfg, 21).unwrap();
        let mut rng = policy_rng(21);
        let mut departed = std::collections::HashSet::new();
        for _ in 0..40 {
            let alive_before: Vec<bool> = state.creators.iter().map(|c| c.alive).collect();
            let corpus_before = state.corpus.len();
            let clicks_before: Vec<u64> = state.corpus.iter().map(|i| i.total_clicks).collect();
            let records_before = state.click_log.total();
            let a = random_action(8, 4, &mut rng);
            let out = state.step(&a).unwrap();

            assert_eq!(out.reward as usize, state.click_log.total() - records_before);
            assert_eq!(out.reward as usize, out.event.clicks.len());
            assert_eq!(state.corpus.len() - corpus_before, out.event.created.len());
            for e in &out.event.created {
                assert!(alive_before[e.creator.index()]);
                assert!(!departed.contains(&e.creator));
            }
            for (before, item) in clicks_before.iter().zip(&state.corpus) {
                assert!(item.total_clicks >= *before);
            }
            // at most one click per (item, user) in a round
            let mut pairs: Vec<_> = out.event.clicks.iter().map(|c| (c.item, c.user)).collect();
            pairs.sort();
            pairs.dedup();
            assert_eq!(pairs.len(), out.event.clicks.len());
            departed.extend(out.event.departures.iter().copied());
        }
        assert!(!departed.is_empty(), "{kind:?}: threshold 3 should cause departures");
    }
}

#[test]
fn snapshot_resumes_identically() {
    let cfg = busy_config();
    let mut state = EcosystemState::new(&cfg, 31).unwrap();
    let mut rng = policy_rng(31);
    for _ in 0..5 {
        let a = random_action(8, 4, &mut rng);
        state.step(&a).unwrap();
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("snap.json");
    state.snapshot().save(&path).unwrap();
    let mut restored = EcosystemState::from_snapshot(Snapshot::load(&path).unwrap()).unwrap();
    for _ in 0..5 {
        let a = random_action(8, 4, &mut rng);
        assert_eq!(state.step(&a).unwrap(), restored.step(&a).unwrap());
    }
}

#[test]
fn event_log_round_trip() {
    let events = run_events(&busy_config(), 41, 6);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("events.jsonl");
    let file = std::fs::File::create(&path).unwrap();
    let mut w = EventLogWriter::new(file, "deadbeef", 41).unwrap();
    for e in &events {
        w.write(e).unwrap();
    }
    drop(w.into_inner());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.lines().next().unwrap().contains("deadbeef"));
    assert_eq!(read_event_log(&path).unwrap(), events);
}
