//! Named, independently seeded random streams.
//!
//! Each subsystem draws from its own stream; extra draws in one stream leave
//! every other stream unchanged.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stream {
    Init,
    CreatorActivity,
    UserActivity,
    CreatorDecision,
    Content,
    Click,
    Recommender,
    Policy,
}

impl Stream {
    pub const ALL: [Stream; 8] = [
        Stream::Init,
        Stream::CreatorActivity,
        Stream::UserActivity,
        Stream::CreatorDecision,
        Stream::Content,
        Stream::Click,
        Stream::Recommender,
        Stream::Policy,
    ];

    fn tag(self) -> u64 {
        match self {
            Stream::Init => 0x01,
            Stream::CreatorActivity => 0x02,
            Stream::UserActivity => 0x03,
            Stream::CreatorDecision => 0x04,
            Stream::Content => 0x05,
            Stream::Click => 0x06,
            Stream::Recommender => 0x07,
            Stream::Policy => 0x08,
        }
    }
}

/// SplitMix64 finalizer; spreads nearby seeds across the seed space.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed
        .wrapping_add(salt.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(seed, stream.tag()))
}

/// Serializable position of a ChaCha stream: the seed it started from plus
/// the number of 32-bit words consumed so far.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: [u8; 32],
    pub word_pos: u128,
}

impl RngState {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        Self {
            seed: rng.get_seed(),
            word_pos: rng.get_word_pos(),
        }
    }

    pub fn restore(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.seed);
        rng.set_word_pos(self.word_pos);
        rng
    }
}

/// The ecosystem's RNG streams.
#[derive(Debug, Clone)]
pub struct RngStreams {
    pub creator_activity: ChaCha8Rng,
    pub user_activity: ChaCha8Rng,
    pub creator_decision: ChaCha8Rng,
    pub content: ChaCha8Rng,
    pub click: ChaCha8Rng,
    pub recommender: ChaCha8Rng,
}

impl RngStreams {
    pub fn new(seed: u64) -> Self {
        Self {
            creator_activity: stream_rng(seed, Stream::CreatorActivity),
            user_activity: stream_rng(seed, Stream::UserActivity),
            creator_decision: stream_rng(seed, Stream::CreatorDecision),
            content: stream_rng(seed, Stream::Content),
            click: stream_rng(seed, Stream::Click),
            recommender: stream_rng(seed, Stream::Recommender),
        }
    }

    pub fn capture(&self) -> [RngState; 6] {
        [
            RngState::capture(&self.creator_activity),
            RngState::capture(&self.user_activity),
            RngState::capture(&self.creator_decision),
            RngState::capture(&self.content),
            RngState::capture(&self.click),
            RngState::capture(&self.recommender),
        ]
    }

    pub fn restore(states: &[RngState; 6]) -> Self {
        Self {
            creator_activity: states[0].restore(),
            user_activity: states[1].restore(),
            creator_decision: states[2].restore(),
            content: states[3].restore(),
            click: states[4].restore(),
            recommender: states[5].restore(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_distinct() {
        let mut a = stream_rng(7, Stream::Click);
        let mut b = stream_rng(7, Stream::Content);
        let xs: Vec<u64> = (0..4).map(|_| a.random()).collect();
        let ys: Vec<u64> = (0..4).map(|_| b.random()).collect();
        assert_ne!(xs, ys);
    }

    #[test]
    fn capture_restore_resumes_stream() {
        let mut rng = stream_rng(3, Stream::Policy);
        for _ in 0..17 {
            let _: f64 = rng.random();
        }
        let state = RngState::capture(&rng);
        let expected: Vec<u32> = (0..8).map(|_| rng.random()).collect();
        let mut resumed = state.restore();
        let got: Vec<u32> = (0..8).map(|_| resumed.random()).collect();
        assert_eq!(expected, got);
    }
}
