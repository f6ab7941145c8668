use ndarray::{Array1, Array2};

use crate::signaling::PlatformAction;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Array1<f64>,
    pub action: PlatformAction,
    /// Joint log-probability under the behavior policy.
    pub log_prob: f64,
    pub next_state: Array1<f64>,
    pub reward: f64,
    pub done: bool,
    /// The episode was cut here; the next transition starts a new one.
    pub truncated: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReplayBuffer {
    pub transitions: Vec<Transition>,
}

impl ReplayBuffer {
    pub fn push(&mut self, t: Transition) {
        self.transitions.push(t);
    }

    pub fn clear(&mut self) {
        self.transitions.clear();
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn states(&self) -> Array2<f64> {
        stack(self.transitions.iter().map(|t| &t.state))
    }

    pub fn next_states(&self) -> Array2<f64> {
        stack(self.transitions.iter().map(|t| &t.next_state))
    }

    pub fn actions(&self) -> Vec<PlatformAction> {
        self.transitions.iter().map(|t| t.action.clone()).collect()
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.transitions.iter().map(|t| t.reward).collect()
    }

    pub fn dones(&self) -> Vec<bool> {
        self.transitions.iter().map(|t| t.done).collect()
    }

    pub fn breaks(&self) -> Vec<bool> {
        self.transitions.iter().map(|t| t.truncated).collect()
    }
}

fn stack<'a>(rows: impl Iterator<Item = &'a Array1<f64>>) -> Array2<f64> {
    let rows: Vec<&Array1<f64>> = rows.collect();
    let width = rows.first().map_or(0, |r| r.len());
    let mut out = Array2::zeros((rows.len(), width));
    for (mut dst, src) in out.rows_mut().into_iter().zip(rows) {
        dst.assign(src);
    }
    out
}
