//! The LoRe learner: state encoding, factored actor, critic, GAE, and the
//! clipped-surrogate training loop.

pub mod actor;
pub mod buffer;
pub mod critic;
pub mod encode;
pub mod gae;
pub mod nn;
pub mod train;
pub mod update;

pub use actor::{joint_log_prob, ActOutput, Actor};
pub use buffer::{ReplayBuffer, Transition};
pub use critic::{critic_loss, critic_loss_against, critic_loss_and_grad, td_targets, Critic};
pub use encode::{decode_genres, encode, row_width};
pub use gae::{gae, gae_with_breaks};
pub use train::{train, Checkpoint, CHECKPOINT_VERSION, ConvergenceDetector, CycleRecord, SignalingEnv, StopReason, TrainOutput, TrainingLog};
pub use update::{actor_loss, actor_loss_and_grad, normalize_advantages, surrogate, update, Agent, UpdateDiagnostics};
