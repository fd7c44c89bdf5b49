use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{Conversation, Exchange, Halt, LiveConversation, StudentIo};
use super::{Expected, Prompt, PromptContext, PromptKind};
use crate::domain::{Domain, QuadTuple, VariableId};
use crate::error::{Error, Result};
use crate::events::EventRecord;
use crate::stores::{KnownEntry, KnownKey, Provenance, Stores};

/// The rejection rules that can stop a tuple before it becomes a question.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectionRule {
    /// Rule 1: the exact `(n, e, v, z)` is already known.
    AlreadyKnown,
    /// Rule 2: the object is unregistered and the object list is closed.
    ObjectUnavailable,
    /// Rule 3: `e` or `v` is outside the equation table.
    OutOfRange,
}

impl RejectionRule {
    pub fn number(self) -> u8 {
        match self {
            RejectionRule::AlreadyKnown => 1,
            RejectionRule::ObjectUnavailable => 2,
            RejectionRule::OutOfRange => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TupleOutcome {
    Rejected(RejectionRule),
    /// Every known inserted while handling the tuple, in insertion order.
    Answered(Vec<KnownEntry>),
    /// The student did not know the value, or turned down a caution.
    Declined,
    /// The same question was already turned down during this generation.
    Deferred,
}

/// Questions the student turned down, keyed by object, quantity and the
/// described zone the question named (`None` for zone-free questions).
/// Cleared at every generation boundary.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AskedMemo {
    declined: BTreeSet<(u8, VariableId, Option<u8>)>,
}

impl AskedMemo {
    pub fn contains(&self, object: u8, var: VariableId, zone: Option<u8>) -> bool {
        self.declined.contains(&(object, var, zone))
    }

    pub fn insert(&mut self, object: u8, var: VariableId, zone: Option<u8>) {
        self.declined.insert((object, var, zone));
    }

    pub fn clear(&mut self) {
        self.declined.clear();
    }

    pub fn len(&self) -> usize {
        self.declined.len()
    }

    pub fn is_empty(&self) -> bool {
        self.declined.is_empty()
    }
}

/// Runs one tuple through the rules against a blocking student.
pub fn process_tuple(
    tuple: QuadTuple,
    stores: &mut Stores,
    domain: &Domain,
    memo: &mut AskedMemo,
    io: &mut dyn StudentIo,
) -> Result<TupleOutcome> {
    let mut live = LiveConversation::new(io);
    let mut ex = Exchange::new(&mut live as &mut dyn Conversation);
    match process_tuple_in(tuple, stores, domain, memo, &mut ex) {
        Ok(outcome) => Ok(outcome),
        Err(Halt::Failed(e)) => Err(e),
        Err(Halt::Suspended) => Err(Error::IoClosed),
    }
}

fn tuple_key(t: QuadTuple) -> KnownKey {
    KnownKey {
        object: t.n,
        eqn: t.e,
        var: t.v,
        zone: t.z,
    }
}

pub(crate) fn process_tuple_in(
    t: QuadTuple,
    stores: &mut Stores,
    domain: &Domain,
    memo: &mut AskedMemo,
    ex: &mut Exchange<'_>,
) -> Result<TupleOutcome, Halt> {
    // 1
    if stores.knowns.contains(&tuple_key(t)) {
        return Ok(TupleOutcome::Rejected(RejectionRule::AlreadyKnown));
    }

    // 2
    if !stores.objects.contains(t.n) {
        if stores.objects.is_closed() {
            return Ok(TupleOutcome::Rejected(RejectionRule::ObjectUnavailable));
        }
        let context = PromptContext {
            tuple: Some(t),
            object: Some(t.n),
            ..PromptContext::default()
        };
        let seen = ex.ask(
            Prompt::new(
                PromptKind::NewObject,
                Expected::FreeText,
                "Do you see any objects in the problem?",
            )
            .with_context(context.clone()),
        )?;
        if seen.is_negative() {
            stores.objects.close();
            return Ok(TupleOutcome::Rejected(RejectionRule::ObjectUnavailable));
        }
        stores.objects.register(t.n, &seen.text)?;
        if stores.objects.len() == 2 {
            ex.say(Prompt::new(
                PromptKind::Info,
                Expected::None,
                "With more than one object, a problem may also hinge on where or when the \
                 objects meet. This tutor does not ask about meetings; look for them yourself.",
            ))?;
        }
        let more = ex.ask(
            Prompt::new(
                PromptKind::MoreObjects,
                Expected::YesNo,
                "Do you see any more objects in this problem?",
            )
            .with_context(context),
        )?;
        if !more.is_affirmative() {
            stores.objects.close();
        }
    }

    // 3
    let Some(symbol) = domain.variable_at(t.e, t.v) else {
        return Ok(TupleOutcome::Rejected(RejectionRule::OutOfRange));
    };

    let object = stores
        .objects
        .display_name(t.n)
        .ok_or(Error::UnknownObject(t.n))?;
    let info = domain.variable(symbol);
    let zone_description = stores.zones.description(t.n, t.z).map(str::to_string);
    let memo_zone = zone_description.as_ref().map(|_| t.z);
    if memo.contains(t.n, symbol, memo_zone) {
        return Ok(TupleOutcome::Deferred);
    }

    let mut context = PromptContext {
        tuple: Some(t),
        object: Some(t.n),
        zone: Some(t.z),
        zone_described: zone_description.is_some(),
        variable: Some(symbol),
        equation: Some(t.e),
        ..PromptContext::default()
    };
    let question = match &zone_description {
        Some(zone) => format!(
            "Do you know the {} ({}) of **{object}** when it was **{zone}**?",
            info.description, info.display
        ),
        None => format!(
            "Do you know the {} ({}) of **{object}**?",
            info.description, info.display
        ),
    };
    let value = ex.ask(
        Prompt::new(PromptKind::KnowVariable, Expected::FreeText, question)
            .with_context(context.clone()),
    )?;
    if value.is_negative() {
        memo.insert(t.n, symbol, memo_zone);
        return Ok(TupleOutcome::Declined);
    }
    let value = value.text.trim().to_string();
    context.response = Some(value.clone());

    if zone_description.is_none() {
        // 4
        let described = ex.ask(
            Prompt::new(
                PromptKind::ZoneDescription,
                Expected::FreeText,
                format!(
                    "What was **{object}** doing when it had the {} you said was **{value}**?",
                    info.description
                ),
            )
            .with_context(context.clone()),
        )?;
        if described.is_negative() {
            memo.insert(t.n, symbol, memo_zone);
            return Ok(TupleOutcome::Declined);
        }
        stores.zones.register(t.n, t.z, &described.text)?;
    } else {
        for past in caution_partners(stores, t.n, t.z, symbol) {
            let mut prompt = render_caution(symbol, &past, stores, domain)?;
            prompt.context.tuple = Some(t);
            prompt.context.equation = Some(t.e);
            prompt.context.response = Some(value.clone());
            let confirmed = ex.ask(prompt)?;
            if !confirmed.is_affirmative() {
                memo.insert(t.n, symbol, memo_zone);
                return Ok(TupleOutcome::Declined);
            }
        }
    }

    let entry = KnownEntry::new(domain, t.n, t.e, symbol, t.z, value, Provenance::Student)?;
    stores.knowns.insert(entry.clone())?;
    let mut inserted = vec![entry.clone()];
    // 5
    inserted.extend(propagate_shared(stores, domain, &entry)?);
    // 6
    inserted.extend(detect_solvable(stores, domain)?);
    record_insertions(ex, &inserted, stores, domain)?;
    Ok(TupleOutcome::Answered(inserted))
}

/// One earlier known per distinct quantity for the same object and zone.
fn caution_partners(stores: &Stores, object: u8, zone: u8, new: VariableId) -> Vec<KnownEntry> {
    let mut seen = BTreeSet::new();
    stores
        .knowns
        .iter()
        .filter(|k| k.object == object && k.zone == zone && k.symbol != new)
        .filter(|k| seen.insert(k.symbol))
        .cloned()
        .collect()
}

/// Logs freshly inserted knowns and advises the student about solvable ones.
pub(crate) fn record_insertions(
    ex: &mut Exchange<'_>,
    inserted: &[KnownEntry],
    stores: &Stores,
    domain: &Domain,
) -> Result<(), Halt> {
    for known in inserted {
        match known.provenance {
            Provenance::Student => ex.record(EventRecord::Answer {
                known: known.clone(),
            }),
            Provenance::SharedPropagation => ex.record(EventRecord::Propagation {
                known: known.clone(),
            }),
            Provenance::ZoneLink => ex.record(EventRecord::ZoneLink {
                known: known.clone(),
            }),
            Provenance::SolvedAlgebraically => {
                let advice = render_solve_advice(known, stores, domain)?;
                ex.record(EventRecord::Solve {
                    known: known.clone(),
                    advice: advice.text.clone(),
                });
                ex.say(advice)?;
            }
        }
    }
    Ok(())
}

/// Lodges `entry`'s value in every other equation holding the same quantity.
pub fn propagate_shared(
    stores: &mut Stores,
    domain: &Domain,
    entry: &KnownEntry,
) -> Result<Vec<KnownEntry>> {
    let mut added = Vec::new();
    for eqn in domain.shared_equations(entry.symbol, entry.eqn)? {
        let copy = KnownEntry::new(
            domain,
            entry.object,
            eqn,
            entry.symbol,
            entry.zone,
            entry.response.clone(),
            Provenance::SharedPropagation,
        )?;
        if !stores.knowns.contains(&copy.key()) {
            stores.knowns.insert(copy.clone())?;
            added.push(copy);
        }
    }
    Ok(added)
}

/// Inserts every variable that has become solvable (all but one of its
/// equation's variables known for an object and zone), propagating each new
/// value, until nothing changes. Returns the new entries in insertion order.
pub fn detect_solvable(stores: &mut Stores, domain: &Domain) -> Result<Vec<KnownEntry>> {
    let mut added = Vec::new();
    loop {
        let triples: BTreeSet<(u8, u8, u8)> = stores
            .knowns
            .iter()
            .map(|k| (k.object, k.eqn, k.zone))
            .collect();
        let mut changed = false;
        for (object, eqn, zone) in triples {
            let Ok(spec) = domain.equation(eqn) else {
                continue;
            };
            let missing: Vec<VariableId> = spec
                .variables
                .iter()
                .copied()
                .filter(|var| {
                    let key = KnownKey {
                        object,
                        eqn,
                        var: spec.position_of(*var).unwrap_or(0),
                        zone,
                    };
                    !stores.knowns.contains(&key)
                })
                .collect();
            if let [only] = missing.as_slice() {
                let solved = KnownEntry::new(
                    domain,
                    object,
                    eqn,
                    *only,
                    zone,
                    format!("solved from equation {eqn}, zone {zone}"),
                    Provenance::SolvedAlgebraically,
                )?;
                stores.knowns.insert(solved.clone())?;
                added.push(solved.clone());
                added.extend(propagate_shared(stores, domain, &solved)?);
                changed = true;
            }
        }
        if !changed {
            return Ok(added);
        }
    }
}

/// Builds the confirm-before-accept prompt relating a newly claimed quantity
/// to an earlier known of the same object and zone.
pub fn render_caution(
    new: VariableId,
    past: &KnownEntry,
    stores: &Stores,
    domain: &Domain,
) -> Result<Prompt> {
    let relationship = domain.lookup_caution(new, past.symbol)?;
    let object = stores
        .objects
        .display_name(past.object)
        .ok_or(Error::UnknownObject(past.object))?;
    let zone = stores
        .zones
        .description(past.object, past.zone)
        .ok_or(Error::UnknownZone {
            object: past.object,
            zone: past.zone,
        })?;
    let info = domain.variable(new);
    let said = match past.provenance {
        Provenance::Student => "which you said was",
        _ => "which was recorded as",
    };
    let text = format!(
        "Do you know the {} of **{object}** {} the time when it was **{zone}**? \
         Keep in mind that {relationship}, {said} **{}**.",
        info.description,
        info.phase.preposition(),
        past.response
    );
    Ok(
        Prompt::new(PromptKind::CautionConfirm, Expected::YesNo, text).with_context(
            PromptContext {
                object: Some(past.object),
                zone: Some(past.zone),
                zone_described: true,
                variable: Some(new),
                past: Some(past.clone()),
                ..PromptContext::default()
            },
        ),
    )
}

pub fn render_solve_advice(known: &KnownEntry, stores: &Stores, domain: &Domain) -> Result<Prompt> {
    let spec = domain.equation(known.eqn)?;
    let info = domain.variable(known.symbol);
    let object = stores
        .objects
        .display_name(known.object)
        .ok_or(Error::UnknownObject(known.object))?;
    let zone = stores
        .zones
        .description(known.object, known.zone)
        .map(|z| format!(" when it was **{z}**"))
        .unwrap_or_default();
    let text = format!(
        "Equation {} ({}) now has a single unknown for **{object}**{zone}. \
         Solve for {} (the {}).",
        known.eqn, spec.display, info.display, info.description
    );
    Ok(
        Prompt::new(PromptKind::SolveAdvice, Expected::None, text).with_context(PromptContext {
            object: Some(known.object),
            zone: Some(known.zone),
            zone_described: true,
            variable: Some(known.symbol),
            equation: Some(known.eqn),
            ..PromptContext::default()
        }),
    )
}
