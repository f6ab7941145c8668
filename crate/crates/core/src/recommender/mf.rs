use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::config::MfConfig;
use crate::ecosystem::{ClickRecord, GenreId, ItemId, UserId};

/// Squared-loss matrix factorization over observed clicks with one sampled
/// negative per positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfModel {
    pub dims: usize,
    pub user_factors: Vec<Vec<f64>>,
    pub item_factors: Vec<Vec<f64>>,
    /// Whether the item appeared in any training example.
    pub item_seen: Vec<bool>,
    /// Mean factor of seen items per genre, used for items created after
    /// training.
    pub genre_factors: Vec<Vec<f64>>,
    /// Mean squared error per epoch.
    pub loss_history: Vec<f64>,
}

impl MfModel {
    fn zeros(users: usize, items: usize, genres: usize, dims: usize) -> Self {
        Self {
            dims,
            user_factors: vec![vec![0.0; dims]; users],
            item_factors: vec![vec![0.0; dims]; items],
            item_seen: vec![false; items],
            genre_factors: vec![vec![0.0; dims]; genres],
            loss_history: Vec::new(),
        }
    }

    pub fn predict(&self, user: UserId, item: ItemId, genre: GenreId) -> f64 {
        let Some(u) = self.user_factors.get(user.index()) else {
            return 0.0;
        };
        let v = match self.item_seen.get(item.index()) {
            Some(true) => &self.item_factors[item.index()],
            _ => match self.genre_factors.get(genre.index()) {
                Some(g) => g,
                None => return 0.0,
            },
        };
        dot(u, v)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Fits user and item factors to the click log by SGD.
///
/// `item_genres[i]` is the genre of item `i`; its length fixes the item
/// catalog. An empty log returns all-zero factors.
pub fn train_mf<R: Rng + ?Sized>(
    clicks: &[ClickRecord],
    users: usize,
    item_genres: &[GenreId],
    genres: usize,
    cfg: &MfConfig,
    rng: &mut R,
) -> MfModel {
    let items = item_genres.len();
    let dims = cfg.dims;
    let mut model = MfModel::zeros(users, items, genres, dims);
    if clicks.is_empty() || items == 0 || users == 0 {
        return model;
    }
    let init = Normal::new(0.0, 0.1).expect("valid normal");
    for f in model.user_factors.iter_mut().chain(model.item_factors.iter_mut()) {
        for x in f.iter_mut() {
            *x = init.sample(rng);
        }
    }

    let mut positives: Vec<(usize, usize)> = clicks
        .iter()
        .filter(|c| c.user.index() < users && c.item.index() < items)
        .map(|c| (c.user.index(), c.item.index()))
        .collect();
    positives.sort_unstable();
    positives.dedup();
    for &(_, i) in &positives {
        model.item_seen[i] = true;
    }

    let mut examples: Vec<(usize, usize, f64)> = Vec::with_capacity(positives.len() * 2);
    for _ in 0..cfg.epochs {
        examples.clear();
        for &(u, i) in &positives {
            examples.push((u, i, 1.0));
            let neg = rng.random_range(0..items);
            model.item_seen[neg] = true;
            examples.push((u, neg, 0.0));
        }
        examples.shuffle(rng);
        let mut sse = 0.0;
        for &(u, i, target) in &examples {
            let err = target - dot(&model.user_factors[u], &model.item_factors[i]);
            sse += err * err;
            for d in 0..dims {
                let pu = model.user_factors[u][d];
                let qi = model.item_factors[i][d];
                model.user_factors[u][d] += cfg.lr * (err * qi - cfg.reg * pu);
                model.item_factors[i][d] += cfg.lr * (err * pu - cfg.reg * qi);
            }
        }
        model.loss_history.push(sse / examples.len() as f64);
    }

    let mut counts = vec![0usize; genres];
    for (i, g) in item_genres.iter().enumerate() {
        if model.item_seen[i] {
            counts[g.index()] += 1;
            for d in 0..dims {
                model.genre_factors[g.index()][d] += model.item_factors[i][d];
            }
        }
    }
    for (g, c) in counts.into_iter().enumerate() {
        if c > 0 {
            for x in model.genre_factors[g].iter_mut() {
                *x /= c as f64;
            }
        }
    }
    model
}
