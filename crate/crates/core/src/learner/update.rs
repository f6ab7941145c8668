use ndarray::{Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::actor::{joint_log_prob, Actor};
use super::buffer::ReplayBuffer;
use super::critic::{critic_loss_against, critic_loss_and_grad, td_targets, Critic};
use super::gae::gae_with_breaks;
use super::nn::Adam;
use crate::config::{LearnerConfig, LossMode};
use crate::error::{Error, Result};
use crate::signaling::PlatformAction;

/// Per-sample loss contribution of the clipped surrogate.
///
/// `StandardPpo`: `−min(ρA, clip(ρ, 1−ε, 1+ε)A)`.
/// `Literal`: `−min(ρ, clip(ρ, 1−ε, 1+ε))·A`.
pub fn surrogate(ratio: f64, advantage: f64, eps: f64, mode: LossMode) -> f64 {
    let clipped = ratio.clamp(1.0 - eps, 1.0 + eps);
    match mode {
        LossMode::StandardPpo => -(ratio * advantage).min(clipped * advantage),
        LossMode::Literal => -ratio.min(clipped) * advantage,
    }
}

/// Derivative of [`surrogate`] with respect to the ratio. Ties between the
/// two branches resolve to the unclipped one.
pub fn surrogate_slope(ratio: f64, advantage: f64, eps: f64, mode: LossMode) -> f64 {
    let clipped = ratio.clamp(1.0 - eps, 1.0 + eps);
    let unclipped_active = match mode {
        LossMode::StandardPpo => ratio * advantage <= clipped * advantage,
        LossMode::Literal => ratio <= clipped,
    };
    if unclipped_active {
        -advantage
    } else {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateEval {
    pub loss: f64,
    /// Flattened gradient with respect to the actor's parameters.
    pub grad: Vec<f64>,
    pub mean_ratio: f64,
    pub clip_fraction: f64,
}

/// Clipped-surrogate actor loss summed over the batch.
pub fn actor_loss(
    actor: &Actor,
    old_log_probs: &[f64],
    states: &Array2<f64>,
    actions: &[PlatformAction],
    advantages: &[f64],
    eps: f64,
    mode: LossMode,
) -> Result<f64> {
    Ok(actor_loss_and_grad(actor, old_log_probs, states, actions, advantages, eps, mode)?.loss)
}

pub fn actor_loss_and_grad(
    actor: &Actor,
    old_log_probs: &[f64],
    states: &Array2<f64>,
    actions: &[PlatformAction],
    advantages: &[f64],
    eps: f64,
    mode: LossMode,
) -> Result<SurrogateEval> {
    if eps <= 0.0 || !eps.is_finite() {
        return Err(Error::config(format!("clip epsilon must be positive, got {eps}")));
    }
    let (logits, trace) = actor.net.forward_traced(states);
    let width = actor.suggestions();
    let mut grad_out = Array2::zeros(logits.raw_dim());
    let mut loss = 0.0;
    let mut ratio_sum = 0.0;
    let mut clipped = 0usize;
    for (t, row) in logits.axis_iter(Axis(0)).enumerate() {
        let probs = actor.probs_from_logits(row);
        let ratio = (joint_log_prob(&probs, &actions[t]) - old_log_probs[t]).exp();
        let a = advantages[t];
        loss += surrogate(ratio, a, eps, mode);
        ratio_sum += ratio;
        if !(1.0 - eps..=1.0 + eps).contains(&ratio) {
            clipped += 1;
        }
        // d loss / d log π = slope · ρ; d log π / d logit_ij = 1[j = a_i] − p_ij
        let coeff = surrogate_slope(ratio, a, eps, mode) * ratio;
        if coeff != 0.0 {
            for (i, s) in actions[t].iter().enumerate() {
                for j in 0..width {
                    let onehot = if j == s.0 { 1.0 } else { 0.0 };
                    grad_out[[t, i * width + j]] = coeff * (onehot - probs[[i, j]]);
                }
            }
        }
    }
    let n = logits.nrows().max(1) as f64;
    Ok(SurrogateEval {
        loss,
        grad: actor.net.backward(&trace, &grad_out),
        mean_ratio: ratio_sum / n,
        clip_fraction: clipped as f64 / n,
    })
}

/// Mean-centers and scales to unit variance; leaves the input alone when
/// it has fewer than two entries or zero spread.
pub fn normalize_advantages(adv: &mut [f64]) {
    if adv.len() < 2 {
        return;
    }
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if std < 1e-12 {
        return;
    }
    for a in adv.iter_mut() {
        *a = (*a - mean) / std;
    }
}

/// Networks plus optimizer state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub actor: Actor,
    pub critic: Critic,
    pub actor_opt: Adam,
    pub critic_opt: Adam,
}

impl Agent {
    pub fn new<R: Rng + ?Sized>(creators: usize, genres: usize, config: &LearnerConfig, rng: &mut R) -> Self {
        let actor = Actor::new(creators, genres, &config.hidden, rng);
        let critic = Critic::new(actor.net.input_dim(), &config.hidden, rng);
        Self {
            actor_opt: Adam::new(actor.net.num_params(), config.actor_lr),
            critic_opt: Adam::new(critic.net.num_params(), config.critic_lr),
            actor,
            critic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateDiagnostics {
    /// Actor loss after the last epoch.
    pub policy_loss: f64,
    /// Critic loss after the last epoch, against targets from the final
    /// critic.
    pub critic_loss: f64,
    /// Actor loss at `θ_old`, i.e. `−ΣA`.
    pub initial_policy_loss: f64,
    pub mean_ratio: f64,
    pub clip_fraction: f64,
    pub epochs: usize,
}

fn check_finite(what: &str, grad: &[f64]) -> Result<()> {
    match grad.iter().position(|g| !g.is_finite()) {
        Some(i) => Err(Error::Numerical(format!("{what} gradient entry {i} is {}", grad[i]))),
        None => Ok(()),
    }
}

/// `M` full-batch epochs on the actor and critic from one buffer.
///
/// On a non-finite gradient the agent is restored to its state at entry
/// and the error is returned.
pub fn update(agent: &mut Agent, buffer: &ReplayBuffer, config: &LearnerConfig) -> Result<UpdateDiagnostics> {
    if config.clip <= 0.0 {
        return Err(Error::config(format!("clip epsilon must be positive, got {}", config.clip)));
    }
    if buffer.is_empty() {
        return Err(Error::config("update called with an empty buffer"));
    }
    let states = buffer.states();
    let next_states = buffer.next_states();
    let actions = buffer.actions();
    let rewards = buffer.rewards();
    let dones = buffer.dones();

    let old = agent.clone();
    let old_log_probs = old.actor.log_probs(&states, &actions);
    let values = old.critic.values(&states).to_vec();
    let next_values = old.critic.values(&next_states).to_vec();
    let mut adv = gae_with_breaks(&rewards, &values, &next_values, &dones, &buffer.breaks(), config.gamma, config.lambda);
    if config.normalize_advantages {
        normalize_advantages(&mut adv);
    }
    let initial_policy_loss = -adv.iter().sum::<f64>();

    let run = |agent: &mut Agent| -> Result<()> {
        for _ in 0..config.epochs {
            let eval = actor_loss_and_grad(
                &agent.actor,
                &old_log_probs,
                &states,
                &actions,
                &adv,
                config.clip,
                config.loss_mode,
            )?;
            check_finite("actor", &eval.grad)?;
            let targets = td_targets(&agent.critic, &rewards, &next_states, &dones, config.gamma);
            let (_, critic_grad) = critic_loss_and_grad(&agent.critic, &states, &targets);
            check_finite("critic", &critic_grad)?;
            agent.actor_opt.step(&mut agent.actor.net, &eval.grad);
            agent.critic_opt.step(&mut agent.critic.net, &critic_grad);
        }
        Ok(())
    };
    if let Err(e) = run(agent) {
        *agent = old;
        return Err(e);
    }

    let last = actor_loss_and_grad(&agent.actor, &old_log_probs, &states, &actions, &adv, config.clip, config.loss_mode)?;
    let targets = td_targets(&agent.critic, &rewards, &next_states, &dones, config.gamma);
    let critic_loss = critic_loss_against(&agent.critic, &states, &targets);
    if !last.loss.is_finite() || !critic_loss.is_finite() {
        let msg = format!("losses diverged (policy {}, critic {critic_loss})", last.loss);
        *agent = old;
        return Err(Error::Numerical(msg));
    }
    Ok(UpdateDiagnostics {
        policy_loss: last.loss,
        critic_loss,
        initial_policy_loss,
        mean_ratio: last.mean_ratio,
        clip_fraction: last.clip_fraction,
        epochs: config.epochs,
    })
}
