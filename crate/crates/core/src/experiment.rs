//! Train/evaluate orchestration, output files, and seed-sweep comparison.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, StrategyKind};
use crate::ecosystem::{EventLogWriter, RoundEvent};
use crate::error::{Error, Result};
use crate::learner::{train, Agent, Checkpoint, TrainingLog, CHECKPOINT_VERSION};
use crate::metrics::{genres_per_creator, MetricsRow, MetricsTracker, RunSummary};
use crate::rng::{mix_seed, stream_rng, RngState, Stream};
use crate::session::{baseline, LorePolicy, PlatformSession, SignalingStrategy};
use crate::trust::FollowDataset;

const TRAIN_SALT: u64 = 0x7472_6169_6e00;
const EVAL_SALT: u64 = 0x6576_616c;

/// Seed of the per-round randomness for training episode `episode`.
pub fn training_dynamics_seed(seed: u64, episode: usize) -> u64 {
    mix_seed(seed, TRAIN_SALT + episode as u64)
}

/// Seed of the per-round randomness of the evaluation phase. Shared by all
/// strategies, so runs with the same seed are paired.
pub fn evaluation_dynamics_seed(seed: u64) -> u64 {
    mix_seed(seed, EVAL_SALT)
}

pub fn provenance(config: &RunConfig, seed: u64) -> String {
    format!("config_hash={},seed={seed}", config.hash())
}

/// Everything produced by one evaluated run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub strategy: StrategyKind,
    pub seed: u64,
    pub config_hash: String,
    pub summary: RunSummary,
    pub metrics: Vec<MetricsRow>,
    pub events: Vec<RoundEvent>,
    pub follows: FollowDataset,
    pub genres_per_creator: Vec<usize>,
    pub training: Option<TrainingLog>,
    pub checkpoint: Option<Checkpoint>,
}

/// Trains a policy on the run's world under fresh per-episode randomness.
pub fn train_policy(config: &RunConfig, seed: u64) -> Result<(Checkpoint, TrainingLog)> {
    config.validate()?;
    let mut rng = stream_rng(seed, Stream::Policy);
    let agent = Agent::new(config.population.creators, config.population.genres, &config.learner, &mut rng);
    let out = train(
        |episode| PlatformSession::with_dynamics(config, seed, training_dynamics_seed(seed, episode)),
        &config.learner,
        agent,
        rng,
    )?;
    let checkpoint = Checkpoint {
        version: CHECKPOINT_VERSION,
        config_hash: config.hash(),
        seed,
        learner: config.learner.clone(),
        agent: out.agent,
        rng: RngState::capture(&out.rng),
    };
    Ok((checkpoint, out.log))
}

/// Runs `eval_rounds` rounds of `strategy` on the evaluation world.
pub fn evaluate(config: &RunConfig, seed: u64, strategy: &mut dyn SignalingStrategy) -> Result<RunOutput> {
    let mut session = PlatformSession::with_dynamics(config, seed, evaluation_dynamics_seed(seed))?;
    let genres = config.population.genres;
    let mut tracker = MetricsTracker::new(genres);
    let mut events = Vec::with_capacity(config.experiment.eval_rounds);
    for _ in 0..config.experiment.eval_rounds {
        let action = strategy.suggest(&session)?;
        let out = session.advance(&action)?;
        tracker.record(&out.event, &session.trust_estimates());
        events.push(out.event);
    }
    Ok(RunOutput {
        strategy: config.strategy,
        seed,
        config_hash: config.hash(),
        summary: RunSummary::from_events(&events, genres),
        metrics: tracker.rows,
        events,
        follows: session.estimator.dataset.clone(),
        genres_per_creator: genres_per_creator(&session.state.creators),
        training: None,
        checkpoint: None,
    })
}

fn lore_policy(config: &RunConfig, seed: u64, checkpoint: &Checkpoint) -> LorePolicy {
    LorePolicy {
        actor: checkpoint.agent.actor.clone(),
        rng: stream_rng(mix_seed(seed, EVAL_SALT), Stream::Policy),
        greedy: config.experiment.eval_greedy,
    }
}

/// Evaluates a previously trained policy.
pub fn evaluate_checkpoint(config: &RunConfig, seed: u64, checkpoint: &Checkpoint) -> Result<RunOutput> {
    let shape = (checkpoint.agent.actor.creators, checkpoint.agent.actor.genres);
    if shape != (config.population.creators, config.population.genres) {
        return Err(Error::config(format!(
            "checkpoint was trained for {} creators and {} genres, config has {} and {}",
            shape.0, shape.1, config.population.creators, config.population.genres
        )));
    }
    let mut policy = lore_policy(config, seed, checkpoint);
    let mut out = evaluate(config, seed, &mut policy)?;
    out.strategy = StrategyKind::Lore;
    Ok(out)
}

/// Trains first when the strategy is `lore`, then evaluates.
pub fn run_experiment(config: &RunConfig, seed: u64) -> Result<RunOutput> {
    config.validate()?;
    match config.strategy {
        StrategyKind::Lore => {
            let (checkpoint, log) = train_policy(config, seed)?;
            let mut out = evaluate_checkpoint(config, seed, &checkpoint)?;
            out.training = Some(log);
            out.checkpoint = Some(checkpoint);
            Ok(out)
        }
        kind => evaluate(config, seed, baseline(kind)?.as_mut()),
    }
}

fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(std::io::BufWriter::new(file))
}

/// Writes `# provenance` followed by the serialized rows.
fn write_csv<T: Serialize>(path: &Path, provenance: &str, rows: &[T]) -> Result<()> {
    let mut out = create(path)?;
    writeln!(out, "# {provenance}").map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    let mut out = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    out.flush().map_err(|e| Error::io(path, e))
}

#[derive(Serialize)]
struct GenreSpreadRow {
    creator_id: usize,
    genres: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryFile {
    pub config_hash: String,
    pub seed: u64,
    pub strategy: StrategyKind,
    pub final_clicks: u64,
    pub diversity: f64,
    pub active_creators: f64,
    pub training_cycles: Option<usize>,
}

impl RunOutput {
    /// Writes `metrics.csv`, `genres_per_creator.csv`, `follows.csv`,
    /// `summary.json`, and when present `events.jsonl`, `training.csv` and
    /// `checkpoint.json` into `dir`.
    pub fn write(&self, dir: &Path, write_events: bool) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let prov = format!("config_hash={},seed={}", self.config_hash, self.seed);
        write_csv(&dir.join("metrics.csv"), &prov, &self.metrics)?;
        let spread: Vec<GenreSpreadRow> = self
            .genres_per_creator
            .iter()
            .enumerate()
            .map(|(creator_id, &genres)| GenreSpreadRow { creator_id, genres })
            .collect();
        write_csv(&dir.join("genres_per_creator.csv"), &prov, &spread)?;
        self.follows.write_csv(&dir.join("follows.csv"), &prov)?;
        if write_events {
            let path = dir.join("events.jsonl");
            let mut w = EventLogWriter::new(create(&path)?, &self.config_hash, self.seed)?;
            for e in &self.events {
                w.write(e)?;
            }
            w.into_inner().flush().map_err(|e| Error::io(&path, e))?;
        }
        if let Some(log) = &self.training {
            log.write_csv(&dir.join("training.csv"), &prov)?;
        }
        if let Some(ckpt) = &self.checkpoint {
            ckpt.save(&dir.join("checkpoint.json"))?;
        }
        let summary = SummaryFile {
            config_hash: self.config_hash.clone(),
            seed: self.seed,
            strategy: self.strategy,
            final_clicks: self.summary.final_clicks,
            diversity: self.summary.diversity,
            active_creators: self.summary.active_creators,
            training_cycles: self.training.as_ref().map(|t| t.cycles.len()),
        };
        let path = dir.join("summary.json");
        std::fs::write(&path, serde_json::to_string_pretty(&summary)?).map_err(|e| Error::io(&path, e))
    }
}

/// Mean and standard error (sample standard deviation over `√n`).
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub strategy: StrategyKind,
    pub runs: usize,
    pub clicks_mean: f64,
    pub clicks_se: f64,
    pub diversity_mean: f64,
    pub diversity_se: f64,
    pub active_creators_mean: f64,
    pub active_creators_se: f64,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    /// Sorted by mean final clicks, highest first.
    pub rows: Vec<ComparisonRow>,
    /// Every run, in config order then seed order.
    pub runs: Vec<RunOutput>,
}

impl Comparison {
    pub fn row(&self, strategy: StrategyKind) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.strategy == strategy)
    }

    /// Final clicks of `strategy`'s runs in seed order.
    pub fn finals(&self, strategy: StrategyKind) -> Vec<u64> {
        self.runs
            .iter()
            .filter(|r| r.strategy == strategy)
            .map(|r| r.summary.final_clicks)
            .collect()
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<20} {:>4} {:>20} {:>18} {:>18}",
            "strategy", "runs", "final clicks", "diversity", "active creators"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<20} {:>4} {:>11.1} ± {:<6.1} {:>9.3} ± {:<6.3} {:>9.3} ± {:<6.3}",
                r.strategy.as_str(),
                r.runs,
                r.clicks_mean,
                r.clicks_se,
                r.diversity_mean,
                r.diversity_se,
                r.active_creators_mean,
                r.active_creators_se
            );
        }
        s
    }

    pub fn write_csv(&self, path: &Path, provenance: &str) -> Result<()> {
        write_csv(path, provenance, &self.rows)
    }
}

/// Runs every config against every seed and aggregates per strategy.
/// Configs must differ only in strategy (and name/output).
pub fn compare(configs: &[RunConfig], seeds: &[u64]) -> Result<Comparison> {
    let Some(first) = configs.first() else {
        return Err(Error::config("compare needs at least one config"));
    };
    if seeds.is_empty() {
        return Err(Error::config("compare needs at least one seed"));
    }
    let key = first.environment_key();
    for c in configs {
        c.validate()?;
        if c.environment_key() != key {
            return Err(Error::config(format!(
                "config '{}' differs from '{}' in more than the strategy",
                c.name, first.name
            )));
        }
    }
    let mut strategies: Vec<&str> = configs.iter().map(|c| c.strategy.as_str()).collect();
    strategies.sort_unstable();
    strategies.dedup();
    if strategies.len() != configs.len() {
        return Err(Error::config("each config in a comparison needs a distinct strategy"));
    }

    let jobs: Vec<(&RunConfig, u64)> = configs.iter().flat_map(|c| seeds.iter().map(move |&s| (c, s))).collect();
    let runs: Vec<RunOutput> = jobs
        .par_iter()
        .map(|&(c, s)| run_experiment(c, s))
        .collect::<Result<Vec<_>>>()?;

    let mut rows: Vec<ComparisonRow> = configs
        .iter()
        .map(|c| {
            let mine: Vec<&RunOutput> = runs.iter().filter(|r| r.strategy == c.strategy).collect();
            let stat = |f: &dyn Fn(&RunOutput) -> f64| mean_se(&mine.iter().map(|r| f(r)).collect::<Vec<_>>());
            let (clicks_mean, clicks_se) = stat(&|r| r.summary.final_clicks as f64);
            let (diversity_mean, diversity_se) = stat(&|r| r.summary.diversity);
            let (active_creators_mean, active_creators_se) = stat(&|r| r.summary.active_creators);
            ComparisonRow {
                strategy: c.strategy,
                runs: mine.len(),
                clicks_mean,
                clicks_se,
                diversity_mean,
                diversity_se,
                active_creators_mean,
                active_creators_se,
            }
        })
        .collect();
    rows.sort_by(|a, b| b.clicks_mean.total_cmp(&a.clicks_mean));
    Ok(Comparison { rows, runs })
}
