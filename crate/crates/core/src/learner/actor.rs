use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::nn::Mlp;
use crate::error::{Error, Result};
use crate::sampling::{sample_index, softmax};
use crate::signaling::{PlatformAction, SuggestionId};

/// Factored policy: one categorical distribution over the suggestion set per
/// creator, all produced by a single network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Actor {
    pub net: Mlp,
    pub creators: usize,
    pub genres: usize,
}

/// Sampled joint action together with its behavior log-probability.
#[derive(Debug, Clone, PartialEq)]
pub struct ActOutput {
    pub action: PlatformAction,
    pub log_prob: f64,
    /// `creators × (genres + 1)`.
    pub probs: Array2<f64>,
}

impl Actor {
    pub fn new<R: Rng + ?Sized>(creators: usize, genres: usize, hidden: &[usize], rng: &mut R) -> Self {
        let mut sizes = vec![creators * super::encode::row_width(genres)];
        sizes.extend_from_slice(hidden);
        sizes.push(creators * (genres + 1));
        Self {
            // a small output layer starts every row close to uniform
            net: Mlp::new(&sizes, 0.01, rng),
            creators,
            genres,
        }
    }

    pub fn suggestions(&self) -> usize {
        self.genres + 1
    }

    /// Row-wise softmax of raw network outputs, one `creators × (genres+1)`
    /// matrix per batch row.
    pub fn probs_from_logits(&self, logits: ArrayView1<f64>) -> Array2<f64> {
        let width = self.suggestions();
        let mut out = Array2::zeros((self.creators, width));
        for (i, mut row) in out.axis_iter_mut(Axis(0)).enumerate() {
            let p = softmax(&logits.as_slice().expect("contiguous")[i * width..(i + 1) * width]);
            row.assign(&Array1::from(p));
        }
        out
    }

    pub fn distribution(&self, state: &Array1<f64>) -> Result<Array2<f64>> {
        let x = state.view().insert_axis(Axis(0)).to_owned();
        let logits = self.net.forward(&x);
        let row = logits.row(0);
        if let Some(bad) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numerical(format!(
                "actor output {bad} is {} (creator {}, suggestion {})",
                row[bad],
                bad / self.suggestions(),
                bad % self.suggestions()
            )));
        }
        Ok(self.probs_from_logits(row))
    }

    /// Samples one suggestion per creator from its row.
    pub fn act<R: Rng + ?Sized>(&self, state: &Array1<f64>, rng: &mut R) -> Result<ActOutput> {
        let probs = self.distribution(state)?;
        let action = PlatformAction(
            probs
                .axis_iter(Axis(0))
                .map(|row| SuggestionId(sample_index(row.as_slice().expect("contiguous"), rng)))
                .collect(),
        );
        let log_prob = joint_log_prob(&probs, &action);
        Ok(ActOutput { action, log_prob, probs })
    }

    /// Per-row argmax, lowest index on ties.
    pub fn greedy(&self, state: &Array1<f64>) -> Result<ActOutput> {
        let probs = self.distribution(state)?;
        let action = PlatformAction(
            probs
                .axis_iter(Axis(0))
                .map(|row| {
                    let mut best = 0;
                    for (j, &p) in row.iter().enumerate() {
                        if p > row[best] {
                            best = j;
                        }
                    }
                    SuggestionId(best)
                })
                .collect(),
        );
        let log_prob = joint_log_prob(&probs, &action);
        Ok(ActOutput { action, log_prob, probs })
    }

    /// Joint log-probabilities of `actions` under the current parameters.
    pub fn log_probs(&self, states: &Array2<f64>, actions: &[PlatformAction]) -> Vec<f64> {
        let logits = self.net.forward(states);
        logits
            .axis_iter(Axis(0))
            .zip(actions)
            .map(|(row, a)| joint_log_prob(&self.probs_from_logits(row), a))
            .collect()
    }
}

/// Sum over creators of the log of the selected entry.
pub fn joint_log_prob(probs: &Array2<f64>, action: &PlatformAction) -> f64 {
    action
        .iter()
        .enumerate()
        .map(|(i, s)| probs[[i, s.0]].ln())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, Stream};

    fn zero_actor(creators: usize, genres: usize) -> Actor {
        let mut rng = stream_rng(0, Stream::Policy);
        let mut actor = Actor::new(creators, genres, &[4], &mut rng);
        let n = actor.net.num_params();
        actor.net.set_flat(&vec![0.0; n]);
        actor
    }

    #[test]
    fn uniform_rows_joint_log_prob() {
        // 3 creators, 3 genres → 4 suggestions each
        let actor = zero_actor(3, 3);
        let state = Array1::zeros(3 * 5);
        let mut rng = stream_rng(1, Stream::Policy);
        for _ in 0..20 {
            let out = actor.act(&state, &mut rng).unwrap();
            assert!((out.log_prob - 3.0 * (0.25f64).ln()).abs() < 1e-12);
            assert!((out.log_prob + 4.1589).abs() < 1e-4);
        }
    }

    #[test]
    fn deterministic_row_always_selected() {
        let mut actor = zero_actor(2, 2);
        // push creator 1's logit for suggestion 2 far above the rest
        let last = actor.net.layers.len() - 1;
        actor.net.layers[last].b[3 + 2] = 1000.0;
        let state = Array1::zeros(2 * 4);
        let mut rng = stream_rng(2, Stream::Policy);
        for _ in 0..100 {
            let out = actor.act(&state, &mut rng).unwrap();
            assert_eq!(out.action.get(1), SuggestionId(2));
        }
    }

    #[test]
    fn sampling_frequencies_match_rows() {
        let mut rng = stream_rng(3, Stream::Policy);
        let actor = Actor::new(2, 2, &[6], &mut rng);
        let mut big = actor.clone();
        // scale the output layer so rows are visibly non-uniform
        let last = big.net.layers.len() - 1;
        big.net.layers[last].w.mapv_inplace(|w| w * 200.0);
        big.net.layers[last].b = Array1::from(vec![0.5, -0.3, 0.1, 1.0, 0.0, -1.0]);
        let state = Array1::from(vec![1.0, 0.0, 0.0, 0.4, 0.0, 0.0, 1.0, 0.9]);
        let probs = big.distribution(&state).unwrap();
        let draws = 10_000;
        let mut counts = Array2::<f64>::zeros((2, 3));
        for _ in 0..draws {
            let out = big.act(&state, &mut rng).unwrap();
            for (i, s) in out.action.iter().enumerate() {
                counts[[i, s.0]] += 1.0;
            }
        }
        for ((i, j), &p) in probs.indexed_iter() {
            assert!((counts[[i, j]] / draws as f64 - p).abs() < 0.02, "row {i} col {j}");
        }
    }

    #[test]
    fn rows_are_distributions_and_log_prob_sums_rows() {
        let mut rng = stream_rng(4, Stream::Policy);
        let actor = Actor::new(5, 3, &[8, 8], &mut rng);
        for _ in 0..20 {
            let state = Array1::from_shape_fn(5 * 5, |_| rng.random::<f64>());
            let out = actor.act(&state, &mut rng).unwrap();
            for row in out.probs.axis_iter(Axis(0)) {
                assert!((row.sum() - 1.0).abs() < 1e-9);
                assert!(row.iter().all(|&p| p >= 0.0));
            }
            let by_rows: f64 = out.action.iter().enumerate().map(|(i, s)| out.probs[[i, s.0]].ln()).sum();
            assert!((out.log_prob - by_rows).abs() < 1e-12);
            let batch = state.view().insert_axis(Axis(0)).to_owned();
            assert!((actor.log_probs(&batch, std::slice::from_ref(&out.action))[0] - out.log_prob).abs() < 1e-12);
        }
    }

    #[test]
    fn non_finite_output_is_an_error() {
        let mut actor = zero_actor(1, 1);
        actor.net.layers[0].b[0] = f64::NAN;
        let err = actor.distribution(&Array1::zeros(3)).unwrap_err();
        assert!(matches!(err, Error::Numerical(_)));
    }
}
