//! Synthetic users and the logistic click model.

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};

use crate::config::{Activity, AffinityGenerator, AudienceConfig, ClickModelParams};
use crate::ecosystem::{Item, ItemId, UserId, UserRecord};
use crate::error::{Error, Result};
use crate::sampling::{bernoulli, logistic};

/// `logistic(bias + w_a·affinity[genre] + w_q·quality)`.
pub fn click_probability(user: &UserRecord, item: &Item, params: &ClickModelParams) -> f64 {
    logistic(click_logit(user, item, params))
}

pub fn click_logit(user: &UserRecord, item: &Item, params: &ClickModelParams) -> f64 {
    params.bias
        + params.affinity_weight * user.genre_affinity[item.genre.index()]
        + params.quality_weight * item.quality
}

/// Independent Bernoulli click per recommended item, drawn in list order.
pub fn sample_clicks<R: Rng + ?Sized>(
    user: &UserRecord,
    recommended: &[&Item],
    params: &ClickModelParams,
    rng: &mut R,
) -> Vec<ItemId> {
    recommended
        .iter()
        .filter(|item| bernoulli(click_probability(user, item, params), rng))
        .map(|item| item.id)
        .collect()
}

pub(crate) fn sample_activity<R: Rng + ?Sized>(activity: &Activity, rng: &mut R) -> f64 {
    match *activity {
        Activity::Constant { p } => p,
        Activity::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
    }
}

/// Synthesizes `users` users over `genres` genres.
pub fn generate_population<R: Rng + ?Sized>(
    users: usize,
    genres: usize,
    config: &AudienceConfig,
    rng: &mut R,
) -> Result<Vec<UserRecord>> {
    (0..users)
        .map(|u| {
            let genre_affinity = match config.affinity {
                AffinityGenerator::Favorite {
                    skew,
                    pool,
                    strength,
                    noise,
                } => {
                    let pool = pool.unwrap_or(genres);
                    let favorite = if bernoulli(skew, rng) {
                        0
                    } else {
                        rng.random_range(0..pool)
                    };
                    let noise = Normal::new(0.0, noise).map_err(|e| Error::config(e.to_string()))?;
                    (0..genres)
                        .map(|g| {
                            let base = if g == favorite { strength } else { 0.0 };
                            base + noise.sample(rng)
                        })
                        .collect()
                }
                AffinityGenerator::Dirichlet { concentration } => {
                    // symmetric Dirichlet as normalized Gamma draws
                    let gamma = Gamma::new(concentration, 1.0).map_err(|e| Error::config(e.to_string()))?;
                    let draws: Vec<f64> = (0..genres).map(|_| gamma.sample(rng)).collect();
                    let total: f64 = draws.iter().sum();
                    if total > 0.0 {
                        draws.iter().map(|d| d / total).collect()
                    } else {
                        vec![1.0 / genres as f64; genres]
                    }
                }
            };
            Ok(UserRecord {
                id: UserId(u),
                genre_affinity,
                activity_prob: sample_activity(&config.activity, rng),
            })
        })
        .collect()
}

/// Index of the largest affinity entry, lowest index on ties.
pub fn favorite_genre(user: &UserRecord) -> usize {
    let mut best = 0;
    for (g, &a) in user.genre_affinity.iter().enumerate() {
        if a > user.genre_affinity[best] {
            best = g;
        }
    }
    best
}

/// Reads a user table with columns
/// `user_id, affinity_0 .. affinity_{G-1}, activity_prob`.
pub fn load_affinity_csv(path: &Path, genres: usize) -> Result<Vec<UserRecord>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let mut expected = vec!["user_id".to_string()];
    expected.extend((0..genres).map(|g| format!("affinity_{g}")));
    expected.push("activity_prob".into());
    let got: Vec<&str> = headers.iter().map(str::trim).collect();
    if got != expected.iter().map(String::as_str).collect::<Vec<_>>() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            message: format!("expected header {}", expected.join(",")),
        });
    }
    let parse_err = |line: usize, what: &str| Error::Parse {
        path: path.to_path_buf(),
        message: format!("row {line}: {what}"),
    };
    let mut users = Vec::new();
    for (line, row) in reader.records().enumerate() {
        let row = row?;
        let num = |i: usize| -> Result<f64> {
            row.get(i)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .filter(|x| x.is_finite())
                .ok_or_else(|| parse_err(line + 1, &format!("column {i} is not a finite number")))
        };
        let id: usize = row
            .get(0)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| parse_err(line + 1, "bad user_id"))?;
        if id != users.len() {
            return Err(parse_err(line + 1, "user ids must be 0..n in order"));
        }
        let genre_affinity = (1..=genres).map(num).collect::<Result<Vec<_>>>()?;
        let activity_prob = num(genres + 1)?;
        if !(0.0..=1.0).contains(&activity_prob) {
            return Err(parse_err(line + 1, "activity_prob outside [0, 1]"));
        }
        users.push(UserRecord {
            id: UserId(id),
            genre_affinity,
            activity_prob,
        });
    }
    Ok(users)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ecosystem::{CreatorId, GenreId};
    use crate::rng::{stream_rng, Stream};

    fn user(affinity: Vec<f64>) -> UserRecord {
        UserRecord { id: UserId(0), genre_affinity: affinity, activity_prob: 1.0 }
    }

    fn item(id: usize, genre: usize, quality: f64) -> Item {
        Item {
            id: ItemId(id),
            creator: CreatorId(0),
            genre: GenreId(genre),
            round_created: Some(0),
            total_clicks: 0,
            impressions: 0,
            quality,
            history_slot: 0,
        }
    }

    fn params(bias: f64, aw: f64, qw: f64) -> ClickModelParams {
        ClickModelParams { bias, affinity_weight: aw, quality_weight: qw }
    }

    #[test]
    fn click_probability_examples() {
        let u = user(vec![1.0, 0.0]);
        let it = item(0, 0, 0.7);
        assert_eq!(click_probability(&u, &it, &params(0.0, 0.0, 0.0)), 0.5);
        assert!(click_probability(&u, &it, &params(-40.0, 0.0, 0.0)) < 1e-15);
        let p = click_probability(&u, &it, &params(-1.0, 2.0, 0.0));
        assert!((p - 1.0 / (1.0 + (-1f64).exp())).abs() < 1e-15);
        assert!((p - 0.7311).abs() < 1e-4);
    }

    #[test]
    fn sample_clicks_edge_cases() {
        let mut rng = stream_rng(1, Stream::Click);
        let u = user(vec![0.0]);
        assert!(sample_clicks(&u, &[], &params(0.0, 0.0, 0.0), &mut rng).is_empty());
        let items: Vec<Item> = (0..5).map(|i| item(i, 0, 0.0)).collect();
        let refs: Vec<&Item> = items.iter().collect();
        let clicks = sample_clicks(&u, &refs, &params(40.0, 0.0, 0.0), &mut rng);
        assert_eq!(clicks, (0..5).map(ItemId).collect::<Vec<_>>());
    }

    #[test]
    fn empirical_ctr_matches_probability() {
        // logit chosen so that p = 0.3 exactly
        let bias = (0.3f64 / 0.7).ln();
        let mut rng = stream_rng(2, Stream::Click);
        let u = user(vec![0.0]);
        let items: Vec<Item> = (0..5).map(|i| item(i, 0, 0.0)).collect();
        let refs: Vec<&Item> = items.iter().collect();
        let trials = 2_000;
        let clicks: usize = (0..trials)
            .map(|_| sample_clicks(&u, &refs, &params(bias, 0.0, 0.0), &mut rng).len())
            .sum();
        let n = (trials * 5) as f64;
        let ctr = clicks as f64 / n;
        let three_sigma = 3.0 * (0.3f64 * 0.7 / n).sqrt();
        assert!((ctr - 0.3).abs() <= three_sigma, "ctr {ctr}");
    }

    #[test]
    fn clicks_are_uncorrelated_across_items() {
        let mut rng = stream_rng(3, Stream::Click);
        let u = user(vec![0.0]);
        let items: Vec<Item> = (0..2).map(|i| item(i, 0, 0.0)).collect();
        let refs: Vec<&Item> = items.iter().collect();
        let n = 10_000;
        let (mut s0, mut s1, mut s01) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let c = sample_clicks(&u, &refs, &params(0.0, 0.0, 0.0), &mut rng);
            let x0 = c.contains(&ItemId(0)) as u8 as f64;
            let x1 = c.contains(&ItemId(1)) as u8 as f64;
            s0 += x0;
            s1 += x1;
            s01 += x0 * x1;
        }
        let nf = n as f64;
        let cov = s01 / nf - (s0 / nf) * (s1 / nf);
        // sd of the covariance estimator is about 0.25 / sqrt(n)
        assert!(cov.abs() < 3.0 * 0.25 / nf.sqrt(), "cov {cov}");
    }

    fn favorite_config(skew: f64) -> AudienceConfig {
        AudienceConfig {
            affinity: AffinityGenerator::Favorite { skew, pool: None, strength: 1.0, noise: 0.1 },
            ..AudienceConfig::default()
        }
    }

    #[test]
    fn unskewed_favorites_are_uniform() {
        let mut rng = stream_rng(4, Stream::Init);
        let users = generate_population(1000, 10, &favorite_config(0.0), &mut rng).unwrap();
        let mut hist = [0usize; 10];
        for u in &users {
            hist[favorite_genre(u)] += 1;
        }
        // multinomial: mean 100, sd sqrt(1000 * 0.1 * 0.9)
        let sd = (1000.0f64 * 0.1 * 0.9).sqrt();
        for &h in &hist {
            assert!((h as f64 - 100.0).abs() <= 3.0 * sd, "{hist:?}");
        }
    }

    #[test]
    fn full_skew_favors_genre_zero() {
        let mut rng = stream_rng(5, Stream::Init);
        let users = generate_population(200, 6, &favorite_config(1.0), &mut rng).unwrap();
        assert!(users.iter().all(|u| favorite_genre(u) == 0));
    }

    #[test]
    fn population_is_reproducible() {
        let cfg = AudienceConfig {
            affinity: AffinityGenerator::Dirichlet { concentration: 0.5 },
            activity: Activity::Uniform { lo: 0.2, hi: 0.9 },
            ..AudienceConfig::default()
        };
        let a = generate_population(50, 4, &cfg, &mut stream_rng(6, Stream::Init)).unwrap();
        let b = generate_population(50, 4, &cfg, &mut stream_rng(6, Stream::Init)).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|u| (0.2..=0.9).contains(&u.activity_prob)));
        assert!(a.iter().all(|u| (u.genre_affinity.iter().sum::<f64>() - 1.0).abs() < 1e-9));
    }

    #[test]
    fn csv_import() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("users.csv");
        std::fs::write(&path, "user_id,affinity_0,affinity_1,activity_prob\n0,0.5,1.5,0.9\n1,2.0,-1.0,0.1\n").unwrap();
        let users = load_affinity_csv(&path, 2).unwrap();
        assert_eq!(users.len(), 2);
        assert_eq!(users[1].genre_affinity, vec![2.0, -1.0]);
        assert_eq!(users[0].activity_prob, 0.9);

        std::fs::write(&path, "user_id,affinity_0,activity_prob\n0,0.5,0.9\n").unwrap();
        assert!(load_affinity_csv(&path, 2).is_err());
        std::fs::write(&path, "user_id,affinity_0,affinity_1,activity_prob\n0,x,1.5,0.9\n").unwrap();
        assert!(load_affinity_csv(&path, 2).is_err());
    }
}
