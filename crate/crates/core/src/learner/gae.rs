/// Generalized advantage estimates over one buffer.
///
/// `δ_t = r_t + γ·V(s_{t+1})·(1 − done_t) − V(s_t)` and
/// `A_t = δ_t + γλ·(1 − done_t)·A_{t+1}`, truncated at the buffer end.
pub fn gae(rewards: &[f64], values: &[f64], next_values: &[f64], dones: &[bool], gamma: f64, lambda: f64) -> Vec<f64> {
    gae_with_breaks(rewards, values, next_values, dones, &vec![false; rewards.len()], gamma, lambda)
}

/// As [`gae`], but a `true` in `breaks` stops the advantage recursion at
/// that step while still bootstrapping from `next_values` (a truncated
/// episode rather than a terminal one).
pub fn gae_with_breaks(
    rewards: &[f64],
    values: &[f64],
    next_values: &[f64],
    dones: &[bool],
    breaks: &[bool],
    gamma: f64,
    lambda: f64,
) -> Vec<f64> {
    let n = rewards.len();
    assert!(values.len() == n && next_values.len() == n && dones.len() == n && breaks.len() == n);
    let mut adv = vec![0.0; n];
    let mut next_adv = 0.0;
    for t in (0..n).rev() {
        let live = if dones[t] { 0.0 } else { 1.0 };
        let delta = rewards[t] + gamma * next_values[t] * live - values[t];
        let carry = if dones[t] || breaks[t] { 0.0 } else { next_adv };
        adv[t] = delta + gamma * lambda * carry;
        next_adv = adv[t];
    }
    adv
}
