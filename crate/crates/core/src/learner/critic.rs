use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::nn::Mlp;

/// State-value network `V(s)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Critic {
    pub net: Mlp,
}

impl Critic {
    pub fn new<R: Rng + ?Sized>(input: usize, hidden: &[usize], rng: &mut R) -> Self {
        let mut sizes = vec![input];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        Self {
            net: Mlp::new(&sizes, 1.0, rng),
        }
    }

    pub fn values(&self, states: &Array2<f64>) -> Array1<f64> {
        self.net.forward(states).index_axis_move(Axis(1), 0)
    }

    pub fn value(&self, state: &Array1<f64>) -> f64 {
        self.values(&state.view().insert_axis(Axis(0)).to_owned())[0]
    }
}

/// Bootstrapped TD targets `R + γ·V(s')·(1 − done)` under `critic`.
pub fn td_targets(critic: &Critic, rewards: &[f64], next_states: &Array2<f64>, dones: &[bool], gamma: f64) -> Vec<f64> {
    let next = critic.values(next_states);
    rewards
        .iter()
        .zip(next.iter())
        .zip(dones)
        .map(|((&r, &v), &d)| r + if d { 0.0 } else { gamma * v })
        .collect()
}

/// Sum of squared TD errors against fixed targets.
pub fn critic_loss_against(critic: &Critic, states: &Array2<f64>, targets: &[f64]) -> f64 {
    critic
        .values(states)
        .iter()
        .zip(targets)
        .map(|(&v, &t)| (t - v).powi(2))
        .sum()
}

/// Loss and semi-gradient: the targets are held constant.
pub fn critic_loss_and_grad(critic: &Critic, states: &Array2<f64>, targets: &[f64]) -> (f64, Vec<f64>) {
    let (out, trace) = critic.net.forward_traced(states);
    let mut loss = 0.0;
    let mut grad_out = Array2::zeros(out.raw_dim());
    for (t, (&v, &target)) in out.column(0).iter().zip(targets).enumerate() {
        let delta = target - v;
        loss += delta * delta;
        grad_out[[t, 0]] = -2.0 * delta;
    }
    (loss, critic.net.backward(&trace, &grad_out))
}

/// `Σ (R + γ·V(s')·(1 − done) − V(s))²`.
pub fn critic_loss(
    critic: &Critic,
    states: &Array2<f64>,
    rewards: &[f64],
    next_states: &Array2<f64>,
    dones: &[bool],
    gamma: f64,
) -> f64 {
    let targets = td_targets(critic, rewards, next_states, dones, gamma);
    critic_loss_against(critic, states, &targets)
}
