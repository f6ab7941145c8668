//! The platform's side of a run: the world plus the trust estimator that
//! feeds the observation, and the strategies that pick suggestions.

use rand_chacha::ChaCha8Rng;

use crate::config::{RunConfig, StrategyKind};
use crate::ecosystem::{EcosystemState, Observation, StepOutcome};
use crate::error::{Error, Result};
use crate::learner::{encode, Actor, SignalingEnv};
use crate::signaling::{genre_click_totals, most_click, most_history_click, no_signal, PlatformAction};
use crate::trust::TrustEstimator;

pub struct PlatformSession {
    pub state: EcosystemState,
    pub estimator: TrustEstimator,
}

impl PlatformSession {
    pub fn new(config: &RunConfig, seed: u64) -> Result<Self> {
        Self::with_dynamics(config, seed, seed)
    }

    pub fn with_dynamics(config: &RunConfig, world_seed: u64, dynamics_seed: u64) -> Result<Self> {
        let state = EcosystemState::with_dynamics(config, world_seed, dynamics_seed)?;
        let te = &config.trust_estimator;
        let half_life = config.trust.dynamic.then_some(te.half_life);
        let estimator = TrustEstimator::new(config.population.creators, te.lr, te.steps_per_round, half_life);
        Ok(Self { state, estimator })
    }

    pub fn trust_estimates(&self) -> Vec<f64> {
        self.estimator.estimates()
    }

    /// Steps the world and refits trust on the round's follow events.
    pub fn advance(&mut self, action: &PlatformAction) -> Result<StepOutcome> {
        let round = self.state.round;
        let out = self.state.step(action)?;
        self.estimator.update(round, &out.follows);
        Ok(out)
    }
}

impl SignalingEnv for PlatformSession {
    fn creators(&self) -> usize {
        self.state.creators.len()
    }

    fn genres(&self) -> usize {
        self.state.genres()
    }

    fn observation(&self) -> Observation {
        self.state.observe(&self.trust_estimates())
    }

    fn step(&mut self, action: &PlatformAction) -> Result<f64> {
        Ok(self.advance(action)?.reward as f64)
    }
}

/// A rule mapping the current platform view to one suggestion per creator.
pub trait SignalingStrategy {
    fn suggest(&mut self, session: &PlatformSession) -> Result<PlatformAction>;
}

pub struct NoSignal;

impl SignalingStrategy for NoSignal {
    fn suggest(&mut self, session: &PlatformSession) -> Result<PlatformAction> {
        Ok(no_signal(session.state.creators.len()))
    }
}

/// Suggests the catalog-wide most-clicked genre to everyone.
pub struct MostClick;

impl SignalingStrategy for MostClick {
    fn suggest(&mut self, session: &PlatformSession) -> Result<PlatformAction> {
        let s = &session.state;
        Ok(most_click(&genre_click_totals(&s.corpus, s.genres()), s.creators.len()))
    }
}

/// Suggests each creator its own most-clicked historical genre.
pub struct MostHistoryClick;

impl SignalingStrategy for MostHistoryClick {
    fn suggest(&mut self, session: &PlatformSession) -> Result<PlatformAction> {
        Ok(most_history_click(&session.state.creators))
    }
}

/// A frozen learned policy.
pub struct LorePolicy {
    pub actor: Actor,
    pub rng: ChaCha8Rng,
    pub greedy: bool,
}

impl SignalingStrategy for LorePolicy {
    fn suggest(&mut self, session: &PlatformSession) -> Result<PlatformAction> {
        let state = encode(&session.observation(), session.state.genres());
        let out = if self.greedy {
            self.actor.greedy(&state)?
        } else {
            self.actor.act(&state, &mut self.rng)?
        };
        Ok(out.action)
    }
}

/// Builds a baseline strategy; `lore` needs a trained actor and is built
/// directly as a [`LorePolicy`].
pub fn baseline(kind: StrategyKind) -> Result<Box<dyn SignalingStrategy>> {
    match kind {
        StrategyKind::None => Ok(Box::new(NoSignal)),
        StrategyKind::MostClick => Ok(Box::new(MostClick)),
        StrategyKind::MostHistoryClick => Ok(Box::new(MostHistoryClick)),
        StrategyKind::Lore => Err(Error::config("the lore strategy needs a trained policy")),
    }
}
