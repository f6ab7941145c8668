use std::io::Write;
use std::path::Path;

use ndarray::Array1;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::buffer::{ReplayBuffer, Transition};
use super::encode::encode;
use super::update::{update, Agent};
use crate::config::LearnerConfig;
use crate::ecosystem::Observation;
use crate::error::{Error, Result};
use crate::rng::RngState;
use crate::signaling::PlatformAction;

/// What the learner needs from a world: its shape, the current
/// observation, and a way to apply an action and collect the reward.
pub trait SignalingEnv {
    fn creators(&self) -> usize;
    fn genres(&self) -> usize;
    fn observation(&self) -> Observation;
    fn step(&mut self, action: &PlatformAction) -> Result<f64>;
}

/// Stops once `window` consecutive values each fail to decrease by at
/// least `tolerance` (relative) from their predecessor.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceDetector {
    window: usize,
    tolerance: f64,
    prev: Option<f64>,
    flat_run: usize,
}

impl ConvergenceDetector {
    pub fn new(window: usize, tolerance: f64) -> Self {
        Self {
            window,
            tolerance,
            prev: None,
            flat_run: 0,
        }
    }

    /// Feeds the next value; returns `true` when the rule fires.
    pub fn push(&mut self, value: f64) -> bool {
        let flat = match self.prev {
            Some(p) => p == value || p - value < self.tolerance * p.abs(),
            None => false,
        };
        self.flat_run = if flat { self.flat_run + 1 } else { 0 };
        self.prev = Some(value);
        self.window > 0 && self.flat_run >= self.window
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleRecord {
    pub cycle: usize,
    pub policy_loss: f64,
    pub critic_loss: f64,
    /// Mean unscaled reward over the cycle's rounds.
    pub mean_reward: f64,
    pub clip_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    RoundCap,
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub cycles: Vec<CycleRecord>,
    pub stop: StopReason,
    pub rounds: usize,
    /// Message of the numerical failure when `stop` is `Diverged`.
    pub error: Option<String>,
}

impl TrainingLog {
    pub fn write_csv(&self, path: &Path, provenance: &str) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = std::io::BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(out, "# {provenance}").map_err(io)?;
        writeln!(out, "cycle,policy_loss,critic_loss,mean_reward,clip_fraction").map_err(io)?;
        for c in &self.cycles {
            writeln!(
                out,
                "{},{},{},{},{}",
                c.cycle, c.policy_loss, c.critic_loss, c.mean_reward, c.clip_fraction
            )
            .map_err(io)?;
        }
        out.flush().map_err(io)
    }
}

pub struct TrainOutput {
    pub agent: Agent,
    pub log: TrainingLog,
    pub rng: ChaCha8Rng,
}

/// Alternates `N`-round collection and `M`-epoch updates until the
/// convergence rule or the round cap fires.
///
/// `env_factory(e)` builds the environment for episode `e`. With
/// `episode_rounds > 0` the environment is rebuilt after that many rounds;
/// the last transition of an episode bootstraps from its successor state
/// but does not pass advantage across the boundary.
pub fn train<E, F>(mut env_factory: F, config: &LearnerConfig, agent: Agent, mut rng: ChaCha8Rng) -> Result<TrainOutput>
where
    E: SignalingEnv,
    F: FnMut(usize) -> Result<E>,
{
    let n = config.rounds_per_buffer;
    if n == 0 {
        return Err(Error::config("rounds_per_buffer must be at least 1"));
    }
    let cycles = config.train_rounds / n;
    let mut agent = agent;
    let mut episode = 0;
    let mut env = env_factory(episode)?;
    let genres = env.genres();
    let mut episode_round = 0;
    let mut state: Array1<f64> = encode(&env.observation(), genres);
    let mut buffer = ReplayBuffer::default();
    let mut detector = ConvergenceDetector::new(config.convergence_window, config.convergence_tolerance);
    let mut log = TrainingLog {
        cycles: Vec::new(),
        stop: StopReason::RoundCap,
        rounds: 0,
        error: None,
    };

    for cycle in 0..cycles {
        buffer.clear();
        let mut reward_sum = 0.0;
        for _ in 0..n {
            let out = agent.actor.act(&state, &mut rng)?;
            let reward = env.step(&out.action)?;
            reward_sum += reward;
            let next_state = encode(&env.observation(), genres);
            episode_round += 1;
            let truncated = config.episode_rounds > 0 && episode_round == config.episode_rounds;
            buffer.push(Transition {
                state,
                action: out.action,
                log_prob: out.log_prob,
                next_state: next_state.clone(),
                reward: reward * config.reward_scale,
                done: false,
                truncated,
            });
            if truncated {
                episode += 1;
                episode_round = 0;
                env = env_factory(episode)?;
                state = encode(&env.observation(), genres);
            } else {
                state = next_state;
            }
        }
        log.rounds += n;
        let diag = match update(&mut agent, &buffer, config) {
            Ok(d) => d,
            Err(Error::Numerical(msg)) => {
                log.stop = StopReason::Diverged;
                log.error = Some(msg);
                break;
            }
            Err(e) => return Err(e),
        };
        log.cycles.push(CycleRecord {
            cycle,
            policy_loss: diag.policy_loss,
            critic_loss: diag.critic_loss,
            mean_reward: reward_sum / n as f64,
            clip_fraction: diag.clip_fraction,
        });
        if !config.run_to_cap && detector.push(diag.policy_loss.abs()) {
            log.stop = StopReason::Converged;
            break;
        }
    }
    Ok(TrainOutput { agent, log, rng })
}

pub const CHECKPOINT_VERSION: u32 = 1;

/// Everything needed to resume or evaluate a trained policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub learner: LearnerConfig,
    pub agent: Agent,
    pub rng: RngState,
}

impl Checkpoint {
    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string(self)?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ckpt: Checkpoint = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        if ckpt.version != CHECKPOINT_VERSION {
            return Err(Error::config(format!(
                "checkpoint version {} is not supported (expected {CHECKPOINT_VERSION})",
                ckpt.version
            )));
        }
        Ok(ckpt)
    }
}
