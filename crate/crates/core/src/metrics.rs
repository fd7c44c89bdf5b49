//! Per-generation metrics folded from a session's event log, plus the
//! GA-versus-control comparison over many seeded runs.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::domain::VariableId;
use crate::engine::PromptKind;
use crate::error::{Error, Result};
use crate::events::{EventRecord, SessionEvent};
use crate::stores::Provenance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationMetrics {
    pub generation: u32,
    /// Values the student supplied during the generation.
    pub responses: u32,
    pub min_fitness: Option<u32>,
    pub mean_fitness: Option<f64>,
    pub max_fitness: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimelineEntry {
    pub seq: u64,
    pub generation: u32,
    pub object: u8,
    pub eqn: u8,
    pub var: VariableId,
    pub zone: u8,
    pub provenance: Provenance,
    pub response: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub per_generation: Vec<GenerationMetrics>,
    pub knowns_timeline: Vec<TimelineEntry>,
    /// Generation in which the student confirmed the sought quantity.
    pub solved_at: Option<u32>,
}

/// Folds an event log into metrics.
pub fn compute(events: &[SessionEvent]) -> Result<RunMetrics> {
    if events.is_empty() {
        return Err(Error::MalformedLog("the event log is empty".into()));
    }
    let mut per: BTreeMap<u32, GenerationMetrics> = BTreeMap::new();
    let mut timeline = Vec::new();
    let mut solved_at = None;
    let mut last_seq = None;
    for event in events {
        if last_seq.is_some_and(|s| event.seq <= s) {
            return Err(Error::MalformedLog(format!(
                "sequence number {} is out of order",
                event.seq
            )));
        }
        last_seq = Some(event.seq);
        let row = per.entry(event.generation).or_insert(GenerationMetrics {
            generation: event.generation,
            responses: 0,
            min_fitness: None,
            mean_fitness: None,
            max_fitness: None,
        });
        match &event.record {
            EventRecord::Answer { .. } => row.responses += 1,
            EventRecord::FitnessSnapshot { min, mean, max, .. } => {
                row.min_fitness = Some(*min);
                row.mean_fitness = Some(*mean);
                row.max_fitness = Some(*max);
            }
            EventRecord::Question {
                prompt: PromptKind::TargetConfirm,
                answer: Some(a),
                ..
            } if a.is_affirmative() && solved_at.is_none() => solved_at = Some(event.generation),
            _ => {}
        }
        if let Some(k) = event.record.known() {
            timeline.push(TimelineEntry {
                seq: event.seq,
                generation: event.generation,
                object: k.object,
                eqn: k.eqn,
                var: k.symbol,
                zone: k.zone,
                provenance: k.provenance,
                response: k.response.clone(),
            });
        }
    }
    Ok(RunMetrics {
        per_generation: per.into_values().collect(),
        knowns_timeline: timeline,
        solved_at,
    })
}

#[derive(Serialize)]
struct CsvRow {
    generation: u32,
    responses: u32,
    min_fitness: Option<u32>,
    mean_fitness: Option<String>,
    max_fitness: Option<u32>,
}

impl RunMetrics {
    pub fn total_responses(&self) -> u32 {
        self.per_generation.iter().map(|g| g.responses).sum()
    }

    /// One row per generation: generation, responses, min, mean, max.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for g in &self.per_generation {
            w.serialize(CsvRow {
                generation: g.generation,
                responses: g.responses,
                min_fitness: g.min_fitness,
                mean_fitness: g.mean_fitness.map(|m| format!("{m:.3}")),
                max_fitness: g.max_fitness,
            })
            .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_timeline_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for entry in &self.knowns_timeline {
            serde_json::to_writer(&mut out, entry).map_err(|e| Error::Io(e.into()))?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

/// Five-number summary using linear interpolation between order statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartiles {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Quartiles {
    /// `values` must be non-empty.
    pub fn of(values: &[u32]) -> Quartiles {
        let mut sorted: Vec<f64> = values.iter().map(|v| f64::from(*v)).collect();
        sorted.sort_by(f64::total_cmp);
        let at = |p: f64| {
            let h = (sorted.len() - 1) as f64 * p;
            let lo = h.floor() as usize;
            let hi = h.ceil() as usize;
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        };
        Quartiles {
            min: sorted[0],
            q1: at(0.25),
            median: at(0.5),
            q3: at(0.75),
            max: sorted[sorted.len() - 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub ga_generations: Vec<u32>,
    pub control_generations: Vec<u32>,
    pub ga: Quartiles,
    pub control: Quartiles,
    /// Median GA generations-to-solve is no greater than the control's.
    pub ga_not_slower: bool,
}

/// Compares generations-to-solve across two sets of solved runs.
pub fn compare(ga: &[RunMetrics], control: &[RunMetrics]) -> Result<Comparison> {
    let solved = |runs: &[RunMetrics]| -> Result<Vec<u32>> {
        if runs.is_empty() {
            return Err(Error::MalformedLog("no runs to compare".into()));
        }
        runs.iter()
            .map(|r| r.solved_at.ok_or(Error::UnsolvedRunPresent))
            .collect()
    };
    let ga_generations = solved(ga)?;
    let control_generations = solved(control)?;
    let ga_q = Quartiles::of(&ga_generations);
    let control_q = Quartiles::of(&control_generations);
    Ok(Comparison {
        ga_not_slower: ga_q.median <= control_q.median,
        ga: ga_q,
        control: control_q,
        ga_generations,
        control_generations,
    })
}
