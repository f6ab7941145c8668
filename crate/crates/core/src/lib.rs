//! Simulation of a creator/audience recommender ecosystem in which the
//! platform learns what genre suggestions to send creators (LoRe), plus the
//! baselines and metrics needed to compare it against.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audience;
pub mod config;
pub mod creator;
pub mod ecosystem;
pub mod error;
pub mod experiment;
pub mod learner;
pub mod metrics;
pub mod presets;
pub mod recommender;
pub mod rng;
pub mod sampling;
pub mod session;
pub mod signaling;
pub mod trust;

pub use config::{RunConfig, StrategyKind};
pub use ecosystem::EcosystemState;
pub use error::{Error, Result};
