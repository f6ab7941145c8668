//! Run configuration: a single TOML document with nested sections.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub name: String,
    pub seed: u64,
    pub strategy: StrategyKind,
    pub population: PopulationConfig,
    pub simulation: SimulationConfig,
    pub trust: TrustConfig,
    pub creators: CreatorConfig,
    pub audience: AudienceConfig,
    pub recommender: RecommenderConfig,
    pub learner: LearnerConfig,
    pub trust_estimator: TrustEstimatorConfig,
    pub experiment: ExperimentConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            name: "default".into(),
            seed: 0,
            strategy: StrategyKind::None,
            population: PopulationConfig::default(),
            simulation: SimulationConfig::default(),
            trust: TrustConfig::default(),
            creators: CreatorConfig::default(),
            audience: AudienceConfig::default(),
            recommender: RecommenderConfig::default(),
            learner: LearnerConfig::default(),
            trust_estimator: TrustEstimatorConfig::default(),
            experiment: ExperimentConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    None,
    MostClick,
    MostHistoryClick,
    Lore,
}

impl StrategyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::None => "none",
            StrategyKind::MostClick => "most_click",
            StrategyKind::MostHistoryClick => "most_history_click",
            StrategyKind::Lore => "lore",
        }
    }
}

impl std::fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(StrategyKind::None),
            "most_click" => Ok(StrategyKind::MostClick),
            "most_history_click" => Ok(StrategyKind::MostHistoryClick),
            "lore" => Ok(StrategyKind::Lore),
            other => Err(Error::config(format!("unknown strategy tag {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PopulationConfig {
    pub creators: usize,
    pub users: usize,
    pub genres: usize,
}

impl Default for PopulationConfig {
    fn default() -> Self {
        Self {
            creators: 50,
            users: 100,
            genres: 14,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    /// Items per recommendation list.
    pub k: usize,
    /// Consecutive zero-click creation rounds before a creator leaves.
    pub churn_threshold: u32,
    /// Only items created in the last `candidate_window` rounds are
    /// recommendable; 0 means the whole corpus.
    pub candidate_window: u32,
    /// Seed items per creator placed in the corpus before round 0.
    pub initial_history: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            k: 5,
            churn_threshold: 10,
            candidate_window: 0,
            initial_history: 1,
        }
    }
}

/// Per-agent activity probability generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Activity {
    Constant { p: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl Activity {
    fn validate(&self, what: &str) -> Result<()> {
        let ok = match *self {
            Activity::Constant { p } => (0.0..=1.0).contains(&p),
            Activity::Uniform { lo, hi } => 0.0 <= lo && lo <= hi && hi <= 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config(format!("{what} activity must lie in [0, 1]")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrustUpdateRule {
    /// Click-delta update only in rounds where the creator followed.
    FollowOnly,
    /// Click-delta update in every round a non-null suggestion was delivered.
    AllSuggested,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrustConfig {
    /// Mean of the parent normal of the truncated initial-trust distribution.
    pub mean: f64,
    /// Standard deviation of the parent normal.
    pub std: f64,
    pub dynamic: bool,
    pub update_rule: TrustUpdateRule,
}

impl Default for TrustConfig {
    fn default() -> Self {
        Self {
            mean: 0.5,
            std: 1.0,
            dynamic: false,
            update_rule: TrustUpdateRule::FollowOnly,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FallbackKind {
    RandomHistory,
    MostHistoryClick,
    Cfd,
    Simuline,
}

impl std::str::FromStr for FallbackKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random_history" => Ok(FallbackKind::RandomHistory),
            "most_history_click" => Ok(FallbackKind::MostHistoryClick),
            "cfd" => Ok(FallbackKind::Cfd),
            "simuline" => Ok(FallbackKind::Simuline),
            other => Err(Error::config(format!("unknown fallback model {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FallbackShare {
    pub model: FallbackKind,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CreatorConfig {
    pub activity: Activity,
    /// Fallback models assigned to contiguous creator blocks in proportion
    /// to their weights.
    pub fallback: Vec<FallbackShare>,
    pub cfd_learning_rate: f64,
    /// Initial logit given to each genre in a creator's seed history.
    pub cfd_initial_logit: f64,
    pub simuline_alpha: f64,
    /// Half-open genre range `[lo, hi)` for seed-history genres; `None`
    /// draws from all genres.
    pub initial_genres: Option<[usize; 2]>,
}

impl Default for CreatorConfig {
    fn default() -> Self {
        Self {
            activity: Activity::Constant { p: 0.8 },
            fallback: vec![FallbackShare {
                model: FallbackKind::RandomHistory,
                weight: 1.0,
            }],
            cfd_learning_rate: 0.1,
            cfd_initial_logit: 1.0,
            simuline_alpha: 1.0,
            initial_genres: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AffinityGenerator {
    /// One favorite genre per user plus Gaussian noise on every entry.
    /// With probability `skew` the favorite is genre 0; otherwise it is
    /// uniform over the first `pool` genres (all genres when absent).
    Favorite {
        skew: f64,
        pool: Option<usize>,
        strength: f64,
        noise: f64,
    },
    /// Affinity vector drawn from a symmetric Dirichlet.
    Dirichlet { concentration: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClickModelParams {
    pub bias: f64,
    pub affinity_weight: f64,
    pub quality_weight: f64,
}

impl Default for ClickModelParams {
    fn default() -> Self {
        Self {
            bias: -2.0,
            affinity_weight: 4.0,
            quality_weight: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AudienceConfig {
    pub activity: Activity,
    pub affinity: AffinityGenerator,
    pub click: ClickModelParams,
    /// Standard deviation of item quality drawn at creation.
    pub quality_std: f64,
    /// Optional CSV table of user affinities replacing the generator.
    pub affinity_csv: Option<PathBuf>,
}

impl Default for AudienceConfig {
    fn default() -> Self {
        Self {
            activity: Activity::Constant { p: 0.8 },
            affinity: AffinityGenerator::Favorite {
                skew: 0.0,
                pool: None,
                strength: 1.0,
                noise: 0.1,
            },
            click: ClickModelParams::default(),
            quality_std: 0.5,
            affinity_csv: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecommenderKind {
    OracleAffinity,
    EmpiricalCtr,
    MfLite,
    Popularity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MfConfig {
    pub dims: usize,
    pub epochs: usize,
    pub lr: f64,
    pub reg: f64,
    pub retrain_every: u32,
}

impl Default for MfConfig {
    fn default() -> Self {
        Self {
            dims: 8,
            epochs: 20,
            lr: 0.05,
            reg: 0.01,
            retrain_every: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RecommenderConfig {
    pub kind: RecommenderKind,
    pub mf: MfConfig,
    /// Minimum impressions per alive creator per round; 0 disables re-ranking.
    pub min_exposure: usize,
}

impl Default for RecommenderConfig {
    fn default() -> Self {
        Self {
            kind: RecommenderKind::OracleAffinity,
            mf: MfConfig::default(),
            min_exposure: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMode {
    /// `min(ρA, clip(ρ)A)`.
    StandardPpo,
    /// `min(ρ, clip(ρ))·A`.
    Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LearnerConfig {
    pub hidden: Vec<usize>,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub clip: f64,
    /// Rounds collected per buffer (N).
    pub rounds_per_buffer: usize,
    /// Gradient epochs per update (M).
    pub epochs: usize,
    /// Hard cap on training rounds (T).
    pub train_rounds: usize,
    /// Training environment is rebuilt with a fresh seed every this many
    /// rounds; 0 keeps one continuing environment.
    pub episode_rounds: usize,
    pub normalize_advantages: bool,
    pub loss_mode: LossMode,
    /// Multiplier applied to rewards before they enter the buffer.
    pub reward_scale: f64,
    pub convergence_window: usize,
    pub convergence_tolerance: f64,
    /// Disable the convergence rule and always train for `train_rounds`.
    pub run_to_cap: bool,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            hidden: vec![128, 128],
            actor_lr: 3e-4,
            critic_lr: 1e-3,
            gamma: 0.95,
            lambda: 0.95,
            clip: 0.2,
            rounds_per_buffer: 16,
            epochs: 10,
            train_rounds: 3000,
            episode_rounds: 0,
            normalize_advantages: true,
            loss_mode: LossMode::StandardPpo,
            reward_scale: 1.0,
            convergence_window: 10,
            convergence_tolerance: 0.01,
            run_to_cap: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrustEstimatorConfig {
    pub lr: f64,
    pub steps_per_round: usize,
    /// Record half-life in rounds, used only when trust is dynamic.
    pub half_life: f64,
}

impl Default for TrustEstimatorConfig {
    fn default() -> Self {
        Self {
            lr: 1.0,
            steps_per_round: 5,
            half_life: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Frozen-policy evaluation rounds (E).
    pub eval_rounds: usize,
    /// Evaluate the learned policy by per-row argmax instead of sampling.
    pub eval_greedy: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            eval_rounds: 100,
            eval_greedy: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub write_event_log: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            write_event_log: true,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(s).map_err(|e| Error::config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: RunConfig = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serializes to JSON");
        let digest = Sha256::digest(&json);
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.seed > i64::MAX as u64 {
            return Err(Error::config("seed must be below 2^63"));
        }
        let p = &self.population;
        if p.creators == 0 || p.genres == 0 {
            return Err(Error::config("population needs at least one creator and one genre"));
        }
        if p.genres > u16::MAX as usize {
            return Err(Error::config("too many genres"));
        }
        if self.simulation.k == 0 {
            return Err(Error::config("k must be at least 1"));
        }
        if self.simulation.churn_threshold == 0 {
            return Err(Error::config("churn_threshold must be at least 1"));
        }
        let t = &self.trust;
        if !(t.std > 0.0) || !t.mean.is_finite() {
            return Err(Error::config("trust std must be positive and mean finite"));
        }
        let c = &self.creators;
        c.activity.validate("creator")?;
        if c.fallback.is_empty() {
            return Err(Error::config("creators.fallback must name at least one model"));
        }
        if c.fallback.iter().any(|s| !(s.weight >= 0.0) || !s.weight.is_finite())
            || c.fallback.iter().map(|s| s.weight).sum::<f64>() <= 0.0
        {
            return Err(Error::config("fallback weights must be nonnegative with a positive sum"));
        }
        if !(c.cfd_learning_rate > 0.0) {
            return Err(Error::config("cfd_learning_rate must be positive"));
        }
        if !(c.simuline_alpha >= 0.0) {
            return Err(Error::config("simuline_alpha must be nonnegative"));
        }
        if let Some([lo, hi]) = c.initial_genres {
            if lo >= hi || hi > p.genres {
                return Err(Error::config("creators.initial_genres must be a nonempty range within the catalog"));
            }
        }
        let a = &self.audience;
        a.activity.validate("user")?;
        match a.affinity {
            AffinityGenerator::Favorite {
                skew,
                pool,
                strength,
                noise,
            } => {
                if !(0.0..=1.0).contains(&skew) {
                    return Err(Error::config("audience skew must lie in [0, 1]"));
                }
                if matches!(pool, Some(n) if n == 0 || n > p.genres) {
                    return Err(Error::config("audience pool must be within 1..=genres"));
                }
                if !strength.is_finite() || !(noise >= 0.0) {
                    return Err(Error::config("affinity strength must be finite and noise nonnegative"));
                }
            }
            AffinityGenerator::Dirichlet { concentration } => {
                if !(concentration > 0.0) {
                    return Err(Error::config("dirichlet concentration must be positive"));
                }
            }
        }
        let cm = &a.click;
        if ![cm.bias, cm.affinity_weight, cm.quality_weight]
            .iter()
            .all(|x| x.is_finite())
            || !(a.quality_std >= 0.0)
        {
            return Err(Error::config("click model parameters must be finite"));
        }
        let r = &self.recommender;
        if r.mf.dims == 0 || r.mf.retrain_every == 0 {
            return Err(Error::config("mf dims and retrain_every must be positive"));
        }
        let l = &self.learner;
        if l.hidden.contains(&0) {
            return Err(Error::config("hidden layer widths must be positive"));
        }
        if !(0.0..=1.0).contains(&l.gamma) || !(0.0..=1.0).contains(&l.lambda) {
            return Err(Error::config("gamma and lambda must lie in [0, 1]"));
        }
        if !(l.clip > 0.0) {
            return Err(Error::config("clip epsilon must be positive"));
        }
        if !(l.actor_lr >= 0.0) || !(l.critic_lr >= 0.0) {
            return Err(Error::config("learning rates must be nonnegative"));
        }
        if l.rounds_per_buffer == 0 {
            return Err(Error::config("rounds_per_buffer must be at least 1"));
        }
        if l.convergence_window == 0 || !(l.convergence_tolerance >= 0.0) {
            return Err(Error::config("invalid convergence rule"));
        }
        if !(l.reward_scale > 0.0) {
            return Err(Error::config("reward_scale must be positive"));
        }
        let te = &self.trust_estimator;
        if !(te.lr >= 0.0) || !(te.half_life > 0.0) {
            return Err(Error::config("trust estimator lr must be nonnegative and half_life positive"));
        }
        Ok(())
    }

    /// Maps creator index to its fallback model by contiguous weighted blocks.
    pub fn fallback_for(&self, creator: usize) -> FallbackKind {
        let shares = &self.creators.fallback;
        let total: f64 = shares.iter().map(|s| s.weight).sum();
        let n = self.population.creators as f64;
        let position = (creator as f64 + 0.5) / n * total;
        let mut acc = 0.0;
        for share in shares {
            acc += share.weight;
            if position < acc {
                return share.model;
            }
        }
        shares.last().map(|s| s.model).unwrap_or(FallbackKind::RandomHistory)
    }

    /// The configuration with the strategy, seed and output fields blanked,
    /// for checking that two runs differ only in strategy.
    pub fn environment_key(&self) -> RunConfig {
        let mut c = self.clone();
        c.strategy = StrategyKind::None;
        c.seed = 0;
        c.name = String::new();
        c.output = OutputConfig::default();
        c
    }
}
