//! JSONL round events and versioned JSON snapshots.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::types::{ClickLog, CreatorId, CreatorRecord, GenreId, Item, ItemId, UserId, UserRecord};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::recommender::Recommender;
use crate::rng::RngState;
use crate::signaling::SuggestionId;

pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CreatedEvent {
    pub creator: CreatorId,
    pub genre: GenreId,
    pub followed: bool,
    pub suggested: SuggestionId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClickEvent {
    pub user: UserId,
    pub item: ItemId,
}

/// One line of the event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundEvent {
    pub round: u32,
    pub reward: u64,
    pub created: Vec<CreatedEvent>,
    pub departures: Vec<CreatorId>,
    pub clicks: Vec<ClickEvent>,
}

#[derive(Serialize)]
struct LogHeader<'a> {
    config_hash: &'a str,
    seed: u64,
}

/// Writes the event log: a provenance header line followed by one
/// `RoundEvent` object per line.
pub struct EventLogWriter<W: Write> {
    out: W,
}

impl<W: Write> EventLogWriter<W> {
    pub fn new(mut out: W, config_hash: &str, seed: u64) -> Result<Self> {
        let header = serde_json::json!({ "header": LogHeader { config_hash, seed } });
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n").map_err(|e| Error::io("<event log>", e))?;
        Ok(Self { out })
    }

    pub fn write(&mut self, event: &RoundEvent) -> Result<()> {
        serde_json::to_writer(&mut self.out, event)?;
        self.out.write_all(b"\n").map_err(|e| Error::io("<event log>", e))
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

/// Reads round events back, skipping the header line.
pub fn read_event_log(path: &Path) -> Result<Vec<RoundEvent>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with("{\"header\""))
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}

/// Full, versioned copy of an `EcosystemState`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub version: u32,
    pub round: u32,
    pub config: RunConfig,
    pub creators: Vec<CreatorRecord>,
    pub users: Vec<UserRecord>,
    pub corpus: Vec<Item>,
    pub click_log: ClickLog,
    pub recommender: Recommender,
    pub last_created: Vec<Option<GenreId>>,
    pub rng: [RngState; 6],
}

impl Snapshot {
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    }
}
