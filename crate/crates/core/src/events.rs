//! The append-only session event log and its JSON-lines form.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::domain::VariableId;
use crate::engine::{Answer, PromptKind};
use crate::error::{Error, Result};
use crate::genome::Mode;
use crate::stores::{KnownEntry, KnownsStore};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EventRecord {
    /// Any prompt shown to the student, with the answer when one was taken.
    Question {
        prompt: PromptKind,
        text: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        answer: Option<Answer>,
    },
    Caution {
        new: VariableId,
        past: VariableId,
        text: String,
        answer: Answer,
    },
    /// A value the student supplied directly.
    Answer {
        known: KnownEntry,
    },
    Propagation {
        known: KnownEntry,
    },
    Solve {
        known: KnownEntry,
        advice: String,
    },
    ZoneOrder {
        object: u8,
        order: Vec<u8>,
    },
    ZoneLink {
        known: KnownEntry,
    },
    GaStep {
        mode: Mode,
        next_generation: u32,
    },
    FitnessSnapshot {
        min: u32,
        mean: f64,
        max: u32,
        values: Vec<u32>,
    },
}

impl EventRecord {
    /// The known this event inserted, if it inserted one.
    pub fn known(&self) -> Option<&KnownEntry> {
        match self {
            EventRecord::Answer { known }
            | EventRecord::Propagation { known }
            | EventRecord::Solve { known, .. }
            | EventRecord::ZoneLink { known } => Some(known),
            _ => None,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            EventRecord::Question { .. } => "question",
            EventRecord::Caution { .. } => "caution",
            EventRecord::Answer { .. } => "answer",
            EventRecord::Propagation { .. } => "propagation",
            EventRecord::Solve { .. } => "solve",
            EventRecord::ZoneOrder { .. } => "zone-order",
            EventRecord::ZoneLink { .. } => "zone-link",
            EventRecord::GaStep { .. } => "ga-step",
            EventRecord::FitnessSnapshot { .. } => "fitness-snapshot",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    /// Logical timestamp: position in the log, starting at 0.
    pub seq: u64,
    pub generation: u32,
    #[serde(flatten)]
    pub record: EventRecord,
}

/// Rebuilds the knowns store by folding the log.
pub fn replay_knowns(events: &[SessionEvent]) -> Result<KnownsStore> {
    let mut store = KnownsStore::new();
    for event in events {
        if let Some(known) = event.record.known() {
            store
                .insert(known.clone())
                .map_err(|e| Error::MalformedLog(format!("event {}: {e}", event.seq)))?;
        }
    }
    Ok(store)
}

pub fn write_jsonl<W: Write>(events: &[SessionEvent], mut out: W) -> Result<()> {
    for event in events {
        serde_json::to_writer(&mut out, event).map_err(|e| Error::Io(e.into()))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<SessionEvent>> {
    let mut events = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let event = serde_json::from_str(&line)
            .map_err(|e| Error::MalformedLog(format!("line {}: {e}", i + 1)))?;
        events.push(event);
    }
    Ok(events)
}
