//! Scenario presets shipped with the crate.

use crate::config::{FallbackKind, FallbackShare, RunConfig, StrategyKind};
use crate::error::{Error, Result};

pub const NAMES: [&str; 3] = ["steering-demo", "skewed-audience", "dynamic-trust"];

/// TOML source of a preset.
pub fn source(name: &str) -> Option<&'static str> {
    match name {
        "steering-demo" => Some(include_str!("../presets/steering-demo.toml")),
        "skewed-audience" => Some(include_str!("../presets/skewed-audience.toml")),
        "dynamic-trust" => Some(include_str!("../presets/dynamic-trust.toml")),
        _ => None,
    }
}

pub fn load(name: &str) -> Result<RunConfig> {
    let src = source(name).ok_or_else(|| {
        Error::config(format!("unknown preset {name:?}; available: {}", NAMES.join(", ")))
    })?;
    RunConfig::from_toml_str(src)
}

/// `name` with the strategy replaced.
pub fn with_strategy(name: &str, strategy: StrategyKind) -> Result<RunConfig> {
    let mut c = load(name)?;
    c.strategy = strategy;
    Ok(c)
}

/// The dynamic-trust preset at initial trust mean `mu`.
pub fn dynamic_trust(mu: f64, strategy: StrategyKind) -> Result<RunConfig> {
    let mut c = with_strategy("dynamic-trust", strategy)?;
    c.trust.mean = mu;
    c.name = format!("dynamic-trust-{mu}");
    c.validate()?;
    Ok(c)
}

/// `name` with every creator on a single fallback model.
pub fn with_fallback(name: &str, model: FallbackKind, strategy: StrategyKind) -> Result<RunConfig> {
    let mut c = with_strategy(name, strategy)?;
    c.creators.fallback = vec![FallbackShare { model, weight: 1.0 }];
    c.validate()?;
    Ok(c)
}
