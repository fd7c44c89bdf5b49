//! Session orchestration: the generation loop over chromosomes and tuples,
//! the organizational phase on unproductive generations, fitness snapshots,
//! GA stepping and termination.
//!
//! A [`Session`] is a resumable state machine. Callers either pull turns with
//! [`Session::poll`] and push answers with [`Session::respond`] (the service
//! does this), or hand it a blocking [`StudentIo`] through
//! [`Session::run_session`]. Interactive work happens in units (the target
//! question, one tuple, one organizational phase). A unit runs against a copy
//! of the stores and is replayed from its recorded answers each time a new
//! answer arrives; only a finished unit is committed.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::domain::{Domain, QuadTuple, VariableId};
use crate::engine::{
    self, process_tuple_in, record_insertions, Answer, AskedMemo, Conversation, Exchange, Expected,
    Halt, LiveConversation, Outgoing, Prompt, PromptContext, PromptKind, ReplayConversation,
    StudentIo, TupleOutcome,
};
use crate::error::{Error, Result};
use crate::events::{EventRecord, SessionEvent};
use crate::fitness::population_fitness;
use crate::genome::{ga_step, seeded_rng, GaConfig, Population, SessionRng};
use crate::stores::{KnownEntry, LinkKey, Provenance, Stores};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SessionStatus {
    Running,
    Solved,
    Exhausted,
    Aborted,
}

/// The quantity the problem asks for, once the student has pinned down
/// which object and zone it belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Target {
    pub object: u8,
    pub variable: VariableId,
    pub zone: u8,
}

/// What the caller should do next.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Turn {
    /// Show this message; no answer is expected.
    Say(Prompt),
    /// Show this prompt and call [`Session::respond`] with the answer.
    Ask(Prompt),
    Finished(SessionStatus),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenerationSummary {
    pub generation: u32,
    pub productive: bool,
    pub responses: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
enum Phase {
    Start,
    Tuples { member: usize, group: usize },
    Organize,
    CloseGeneration,
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
enum Unit {
    Target,
    Tuple(QuadTuple),
    Organize,
}

/// Everything an interactive unit may change; cloned before each replay.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
struct Working {
    stores: Stores,
    memo: AskedMemo,
    target_variable: Option<VariableId>,
    target: Option<Target>,
    declined_targets: BTreeSet<(u8, u8)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Session {
    domain: Domain,
    config: GaConfig,
    seed: u64,
    rng: SessionRng,
    population: Population,
    capture_target: bool,
    work: Working,
    events: Vec<SessionEvent>,
    status: SessionStatus,
    generation: u32,
    phase: Phase,
    gen_responses: u32,
    gen_new_knowns: usize,
    unit_answers: Vec<Answer>,
    delivered: usize,
    outbox: VecDeque<OutgoingTurn>,
    awaiting: Option<Prompt>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
enum OutgoingTurn {
    Say(Prompt),
    Ask(Prompt),
}

impl From<Outgoing> for OutgoingTurn {
    fn from(o: Outgoing) -> Self {
        match o {
            Outgoing::Say(p) => OutgoingTurn::Say(p),
            Outgoing::Ask(p) => OutgoingTurn::Ask(p),
        }
    }
}

impl Session {
    /// A fresh session whose initial population and every later GA step draw
    /// from one generator seeded with `seed`.
    pub fn new(config: GaConfig, seed: u64, domain: Domain) -> Result<Session> {
        config.validate()?;
        let mut rng = seeded_rng(seed);
        let population = Population::random(&config, seed, &mut rng)?;
        Ok(Session::with_population(
            config, seed, domain, population, rng,
        ))
    }

    /// Starts from a caller-supplied population; used by tests that need a
    /// hand-built generation.
    pub fn from_population(
        config: GaConfig,
        seed: u64,
        domain: Domain,
        population: Population,
    ) -> Result<Session> {
        config.validate()?;
        if let Some(bad) = population
            .members
            .iter()
            .find(|m| m.len() != config.chromosome_bits)
        {
            return Err(Error::MalformedChromosome {
                bits: bad.len(),
                expected: config.chromosome_bits,
            });
        }
        Ok(Session::with_population(
            config,
            seed,
            domain,
            population,
            seeded_rng(seed),
        ))
    }

    fn with_population(
        config: GaConfig,
        seed: u64,
        domain: Domain,
        population: Population,
        rng: SessionRng,
    ) -> Session {
        Session {
            domain,
            config,
            seed,
            rng,
            population,
            capture_target: true,
            work: Working::default(),
            events: Vec::new(),
            status: SessionStatus::Running,
            generation: 1,
            phase: Phase::Start,
            gen_responses: 0,
            gen_new_knowns: 0,
            unit_answers: Vec::new(),
            delivered: 0,
            outbox: VecDeque::new(),
            awaiting: None,
        }
    }

    /// Presets the sought quantity so the startup question is skipped.
    pub fn with_target_variable(mut self, variable: VariableId) -> Session {
        self.work.target_variable = Some(variable);
        self
    }

    /// With capture off and no preset variable, the session never asks what
    /// the problem wants and can only end exhausted or aborted.
    pub fn with_target_capture(mut self, capture: bool) -> Session {
        self.capture_target = capture;
        self
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn config(&self) -> &GaConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn population(&self) -> &Population {
        &self.population
    }

    pub fn stores(&self) -> &Stores {
        &self.work.stores
    }

    pub fn events(&self) -> &[SessionEvent] {
        &self.events
    }

    pub fn status(&self) -> SessionStatus {
        self.status
    }

    pub fn generation(&self) -> u32 {
        self.generation
    }

    pub fn target_variable(&self) -> Option<VariableId> {
        self.work.target_variable
    }

    pub fn target(&self) -> Option<Target> {
        self.work.target
    }

    pub fn is_finished(&self) -> bool {
        self.phase == Phase::Done
    }

    /// The prompt waiting for an answer, if any.
    pub fn pending(&self) -> Option<&Prompt> {
        self.awaiting.as_ref()
    }

    /// Marks the session aborted, e.g. when the student's channel closed.
    pub fn abort(&mut self) {
        if self.status == SessionStatus::Running {
            self.status = SessionStatus::Aborted;
        }
        self.phase = Phase::Done;
        self.outbox.clear();
        self.awaiting = None;
    }

    /// Runs until the next turn for the student.
    pub fn poll(&mut self) -> Result<Turn> {
        loop {
            if let Some(turn) = self.step()? {
                return Ok(turn);
            }
        }
    }

    /// Answers the pending prompt. The answer must fit the prompt's shape.
    pub fn respond(&mut self, answer: Answer) -> Result<()> {
        let prompt = self.awaiting.as_ref().ok_or(Error::NoPendingPrompt)?;
        prompt.check(&answer)?;
        self.awaiting = None;
        self.unit_answers.push(answer);
        Ok(())
    }

    /// Either hands back a pending turn or does one bounded piece of work.
    fn step(&mut self) -> Result<Option<Turn>> {
        if let Some(p) = &self.awaiting {
            return Ok(Some(Turn::Ask(p.clone())));
        }
        if let Some(item) = self.outbox.pop_front() {
            return Ok(Some(match item {
                OutgoingTurn::Say(p) => Turn::Say(p),
                OutgoingTurn::Ask(p) => {
                    self.awaiting = Some(p.clone());
                    Turn::Ask(p)
                }
            }));
        }
        if self.phase == Phase::Done {
            return Ok(Some(Turn::Finished(self.status)));
        }
        self.advance()?;
        Ok(None)
    }

    fn advance(&mut self) -> Result<()> {
        match self.phase {
            Phase::Start => {
                if self.config.max_generations == 0 {
                    self.status = SessionStatus::Exhausted;
                    self.phase = Phase::Done;
                    return Ok(());
                }
                if self.capture_target
                    && self.work.target_variable.is_none()
                    && !self.run_unit(Unit::Target)?
                {
                    return Ok(());
                }
                self.phase = Phase::Tuples {
                    member: 0,
                    group: 0,
                };
            }
            Phase::Tuples { member, group } => self.advance_tuples(member, group)?,
            Phase::Organize => {
                if self.gen_new_knowns == 0 && !self.run_unit(Unit::Organize)? {
                    return Ok(());
                }
                self.phase = Phase::CloseGeneration;
            }
            Phase::CloseGeneration => self.close_generation()?,
            Phase::Done => {}
        }
        Ok(())
    }

    /// Skips silently rejected tuples until one needs the student, then runs
    /// that tuple as a unit.
    fn advance_tuples(&mut self, mut member: usize, mut group: usize) -> Result<()> {
        let groups = self.config.tuples_per_chromosome();
        while member < self.population.len() {
            while group < groups {
                let tuple = self.population.members[member].decode_tuple(group)?;
                if self.screen(tuple) {
                    group += 1;
                    continue;
                }
                self.phase = Phase::Tuples { member, group };
                if !self.run_unit(Unit::Tuple(tuple))? {
                    return Ok(());
                }
                self.phase = if self.status == SessionStatus::Solved {
                    Phase::CloseGeneration
                } else {
                    Phase::Tuples {
                        member,
                        group: group + 1,
                    }
                };
                return Ok(());
            }
            member += 1;
            group = 0;
        }
        self.phase = Phase::Organize;
        Ok(())
    }

    /// Read-only check for tuples that would be rejected or deferred without
    /// any dialog. Must agree with the rule order in the engine.
    fn screen(&self, t: QuadTuple) -> bool {
        let stores = &self.work.stores;
        if stores.knowns.contains(&crate::stores::KnownKey {
            object: t.n,
            eqn: t.e,
            var: t.v,
            zone: t.z,
        }) {
            return true;
        }
        if !stores.objects.contains(t.n) {
            return stores.objects.is_closed();
        }
        match self.domain.variable_at(t.e, t.v) {
            None => true,
            Some(var) => {
                let zone = stores.zones.contains(t.n, t.z).then_some(t.z);
                self.work.memo.contains(t.n, var, zone)
            }
        }
    }

    /// Runs `unit` against a copy of the working state, replaying the answers
    /// gathered so far. Returns `true` when the unit finished and was
    /// committed, `false` when it is waiting on the student.
    fn run_unit(&mut self, unit: Unit) -> Result<bool> {
        let mut work = self.work.clone();
        let mut conv = ReplayConversation::new(&self.unit_answers);
        let (result, records) = {
            let mut ex = Exchange::new(&mut conv as &mut dyn Conversation);
            let result = run_unit_body(unit, &mut work, &self.domain, &mut ex);
            (result, ex.records)
        };
        let transcript = conv.transcript;
        for item in transcript.into_iter().skip(self.delivered) {
            self.delivered += 1;
            self.outbox.push_back(item.into());
        }
        match result {
            Ok(()) => {
                self.unit_answers.clear();
                self.delivered = 0;
                self.commit(work, records);
                Ok(true)
            }
            Err(Halt::Suspended) => Ok(false),
            Err(Halt::Failed(e)) => Err(e),
        }
    }

    fn commit(&mut self, work: Working, records: Vec<EventRecord>) {
        for record in records {
            match &record {
                EventRecord::Answer { .. } => {
                    self.gen_responses += 1;
                    self.gen_new_knowns += 1;
                }
                r if r.known().is_some() => self.gen_new_knowns += 1,
                _ => {}
            }
            self.log(record);
        }
        self.work = work;
        if self.work.target.is_some() && self.status == SessionStatus::Running {
            self.status = SessionStatus::Solved;
        }
    }

    fn log(&mut self, record: EventRecord) {
        self.events.push(SessionEvent {
            seq: self.events.len() as u64,
            generation: self.generation,
            record,
        });
    }

    fn close_generation(&mut self) -> Result<()> {
        let fitness = population_fitness(
            &self.population,
            &self.work.stores.knowns,
            &self.config,
            &self.domain,
        )?;
        let min = fitness.iter().copied().min().unwrap_or(0);
        let max = fitness.iter().copied().max().unwrap_or(0);
        let mean = if fitness.is_empty() {
            0.0
        } else {
            fitness.iter().map(|f| f64::from(*f)).sum::<f64>() / fitness.len() as f64
        };
        self.log(EventRecord::FitnessSnapshot {
            min,
            mean,
            max,
            values: fitness.clone(),
        });

        if self.status != SessionStatus::Running {
            self.phase = Phase::Done;
            return Ok(());
        }
        if self.generation >= self.config.max_generations {
            self.status = SessionStatus::Exhausted;
            self.phase = Phase::Done;
            return Ok(());
        }
        self.population = ga_step(&self.population, &fitness, &self.config, &mut self.rng)?;
        self.log(EventRecord::GaStep {
            mode: self.config.mode,
            next_generation: self.generation + 1,
        });
        self.generation += 1;
        self.work.memo.clear();
        self.gen_responses = 0;
        self.gen_new_knowns = 0;
        self.phase = Phase::Tuples {
            member: 0,
            group: 0,
        };
        Ok(())
    }

    /// Drives the session with a blocking student until `stop` holds at a
    /// turn boundary or the session finishes. A closed channel aborts.
    fn drive(&mut self, io: &mut dyn StudentIo, stop: impl Fn(&Session) -> bool) -> Result<()> {
        loop {
            if self.awaiting.is_none() && self.outbox.is_empty() && stop(self) {
                return Ok(());
            }
            let Some(turn) = self.step()? else {
                continue;
            };
            let outcome = match turn {
                Turn::Finished(_) => return Ok(()),
                Turn::Say(p) => io.present(&p),
                Turn::Ask(p) => io
                    .present(&p)
                    .and_then(|_| io.receive(&p))
                    .and_then(|a| self.respond(a)),
            };
            match outcome {
                Ok(()) => {}
                Err(Error::IoClosed) => {
                    self.abort();
                    return Ok(());
                }
                Err(e) => return Err(e),
            }
        }
    }

    /// Processes every tuple of the current generation. Returns the number of
    /// values the student supplied along the way.
    pub fn run_generation(&mut self, io: &mut dyn StudentIo) -> Result<GenerationSummary> {
        let generation = self.generation;
        let before = self.events.len();
        self.drive(io, |s| {
            s.generation != generation
                || matches!(
                    s.phase,
                    Phase::Organize | Phase::CloseGeneration | Phase::Done
                )
        })?;
        let responses = self.events[before..]
            .iter()
            .filter(|e| matches!(e.record, EventRecord::Answer { .. }))
            .count() as u32;
        Ok(GenerationSummary {
            generation,
            productive: responses > 0,
            responses,
        })
    }

    /// Runs the organizational phase if the current generation has reached
    /// it, returning the knowns it added.
    pub fn organizational_phase(&mut self, io: &mut dyn StudentIo) -> Result<Vec<KnownEntry>> {
        let generation = self.generation;
        let before = self.events.len();
        self.drive(io, |s| {
            s.generation != generation
                || matches!(s.phase, Phase::CloseGeneration | Phase::Done)
                || matches!(s.phase, Phase::Tuples { .. })
        })?;
        Ok(self.events[before..]
            .iter()
            .filter_map(|e| e.record.known().cloned())
            .collect())
    }

    /// Runs to a terminal status.
    pub fn run_session(mut self, io: &mut dyn StudentIo) -> Result<Session> {
        self.drive(io, |_| false)?;
        Ok(self)
    }
}

fn run_unit_body(
    unit: Unit,
    work: &mut Working,
    domain: &Domain,
    ex: &mut Exchange<'_>,
) -> Result<(), Halt> {
    match unit {
        Unit::Target => ask_target(work, domain, ex),
        Unit::Tuple(t) => {
            let outcome = process_tuple_in(t, &mut work.stores, domain, &mut work.memo, ex)?;
            if let TupleOutcome::Answered(entries) = outcome {
                confirm_targets(&entries, work, domain, ex)?;
            }
            Ok(())
        }
        Unit::Organize => {
            organize_in(work, domain, ex)?;
            Ok(())
        }
    }
}

fn ask_target(work: &mut Working, domain: &Domain, ex: &mut Exchange<'_>) -> Result<(), Halt> {
    let choices: Vec<String> = domain
        .variables()
        .iter()
        .map(|v| format!("{} ({})", v.symbol, v.description))
        .collect();
    let text = format!(
        "What is the problem asking you to find? Name one quantity: {}.",
        choices.join(", ")
    );
    loop {
        let answer = ex.ask(Prompt::new(
            PromptKind::Target,
            Expected::FreeText,
            text.clone(),
        ))?;
        if let Ok(var) = answer.text.parse::<VariableId>() {
            work.target_variable = Some(var);
            return Ok(());
        }
    }
}

/// Asks whether newly known entries of the sought quantity are the one the
/// problem wants.
fn confirm_targets(
    entries: &[KnownEntry],
    work: &mut Working,
    domain: &Domain,
    ex: &mut Exchange<'_>,
) -> Result<(), Halt> {
    let Some(wanted) = work.target_variable else {
        return Ok(());
    };
    for entry in entries.iter().filter(|e| e.symbol == wanted) {
        if work.target.is_some() {
            break;
        }
        let place = (entry.object, entry.zone);
        if work.declined_targets.contains(&place) {
            continue;
        }
        let info = domain.variable(wanted);
        let object = work
            .stores
            .objects
            .display_name(entry.object)
            .ok_or(Error::UnknownObject(entry.object))?;
        let zone = work
            .stores
            .zones
            .description(entry.object, entry.zone)
            .unwrap_or("in this zone")
            .to_string();
        let answer = ex.ask(
            Prompt::new(
                PromptKind::TargetConfirm,
                Expected::YesNo,
                format!(
                    "The {} ({}) of **{object}** when it was **{zone}** can now be found. \
                     Is that what the problem is asking for?",
                    info.description, info.display
                ),
            )
            .with_context(PromptContext {
                object: Some(entry.object),
                zone: Some(entry.zone),
                zone_described: true,
                variable: Some(wanted),
                equation: Some(entry.eqn),
                ..PromptContext::default()
            }),
        )?;
        if answer.is_affirmative() {
            work.target = Some(Target {
                object: entry.object,
                variable: wanted,
                zone: entry.zone,
            });
        } else {
            work.declined_targets.insert(place);
        }
    }
    Ok(())
}

/// Orders each object's zones in time and offers to carry terminal
/// quantities of one zone into the initial quantities of the next.
fn organize_in(
    work: &mut Working,
    domain: &Domain,
    ex: &mut Exchange<'_>,
) -> Result<Vec<KnownEntry>, Halt> {
    let mut added = Vec::new();
    let objects: Vec<u8> = work.stores.objects.iter().map(|(n, _)| n).collect();
    for object in objects {
        let zones = work.stores.zones.zones_of(object);
        if zones.len() < 2 {
            continue;
        }
        let name = work
            .stores
            .objects
            .display_name(object)
            .ok_or(Error::UnknownObject(object))?;
        if !work.stores.zones.has_current_order(object) {
            let listing: Vec<String> = zones
                .iter()
                .map(|z| {
                    format!(
                        "  zone {z}: {}",
                        work.stores.zones.description(object, *z).unwrap_or("")
                    )
                })
                .collect();
            let prompt = Prompt::new(
                PromptKind::ZoneOrder,
                Expected::Ordering,
                format!(
                    "In what order in time did these happen to **{name}**? \
                     Reply with the zone numbers, earliest first.\n{}",
                    listing.join("\n")
                ),
            )
            .with_context(PromptContext {
                object: Some(object),
                zones: zones.clone(),
                ..PromptContext::default()
            });
            let answer = ex.ask(prompt.clone())?;
            let order = prompt.parse_ordering(&answer)?;
            work.stores
                .zones
                .set_temporal_order(object, order.clone())?;
            ex.record(EventRecord::ZoneOrder { object, order });
        }

        let order = work
            .stores
            .zones
            .temporal_order(object)
            .map(<[u8]>::to_vec)
            .unwrap_or_default();
        for pair in order.windows(2) {
            let (from, to) = (pair[0], pair[1]);
            for link in domain.links() {
                let Some(source) = work
                    .stores
                    .knowns
                    .first_with_symbol(object, from, link.terminal)
                    .cloned()
                else {
                    continue;
                };
                if work.stores.knowns.knows_symbol(object, to, link.initial) {
                    continue;
                }
                let key = LinkKey {
                    object,
                    from_zone: from,
                    to_zone: to,
                    terminal: link.terminal,
                };
                if work.stores.zones.link_declined(&key) {
                    continue;
                }
                let terminal = domain.variable(link.terminal);
                let initial = domain.variable(link.initial);
                let from_desc = work.stores.zones.description(object, from).unwrap_or("");
                let to_desc = work.stores.zones.description(object, to).unwrap_or("");
                let answer = ex.ask(
                    Prompt::new(
                        PromptKind::ZoneLink,
                        Expected::YesNo,
                        format!(
                            "Is the {} ({}) of **{name}** at the end of the time when it was \
                             **{from_desc}** the same as its {} ({}) at the start of the time \
                             when it was **{to_desc}**?",
                            terminal.description,
                            terminal.display,
                            initial.description,
                            initial.display
                        ),
                    )
                    .with_context(PromptContext {
                        object: Some(object),
                        zone: Some(to),
                        zone_described: true,
                        variable: Some(link.initial),
                        link: Some(key),
                        ..PromptContext::default()
                    }),
                )?;
                if !answer.is_affirmative() {
                    work.stores.zones.decline_link(key);
                    continue;
                }
                let eqn = if domain.position_of(source.eqn, link.initial).is_some() {
                    source.eqn
                } else {
                    domain
                        .occurrences(link.initial)
                        .next()
                        .map(|(e, _)| e)
                        .ok_or(Error::DomainData(format!(
                            "{} appears in no equation",
                            link.initial
                        )))?
                };
                let linked = KnownEntry::new(
                    domain,
                    object,
                    eqn,
                    link.initial,
                    to,
                    format!("← {} from zone {from}", terminal.display),
                    Provenance::ZoneLink,
                )?;
                work.stores.knowns.insert(linked.clone())?;
                let mut inserted = vec![linked.clone()];
                inserted.extend(engine::propagate_shared(&mut work.stores, domain, &linked)?);
                inserted.extend(engine::detect_solvable(&mut work.stores, domain)?);
                record_insertions(ex, &inserted, &work.stores, domain)?;
                confirm_targets(&inserted, work, domain, ex)?;
                added.extend(inserted);
                if work.target.is_some() {
                    return Ok(added);
                }
            }
        }
    }
    Ok(added)
}

/// Blocking organizational phase over bare stores, for callers outside a
/// session. Returns the knowns it added.
pub fn organizational_phase(
    stores: &mut Stores,
    domain: &Domain,
    io: &mut dyn StudentIo,
) -> Result<Vec<KnownEntry>> {
    let mut work = Working {
        stores: std::mem::take(stores),
        ..Working::default()
    };
    let mut live = LiveConversation::new(io);
    let result = {
        let mut ex = Exchange::new(&mut live as &mut dyn Conversation);
        organize_in(&mut work, domain, &mut ex)
    };
    *stores = work.stores;
    match result {
        Ok(added) => Ok(added),
        Err(Halt::Failed(e)) => Err(e),
        Err(Halt::Suspended) => Err(Error::IoClosed),
    }
}
