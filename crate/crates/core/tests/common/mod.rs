#![allow(dead_code)]

use std::collections::VecDeque;

use socratic_ga::domain::{Domain, QuadTuple, VariableId};
use socratic_ga::engine::{
    process_tuple, Answer, AskedMemo, Prompt, PromptKind, StudentIo, TupleOutcome,
};
use socratic_ga::stores::{KnownEntry, KnownsStore, Provenance, Stores};
use socratic_ga::{Chromosome, Error, Result};

/// Answers from a fixed queue; records every prompt shown.
#[derive(Default)]
pub struct Queue {
    pub answers: VecDeque<Answer>,
    pub seen: Vec<Prompt>,
}

impl Queue {
    pub fn new(answers: Vec<Answer>) -> Queue {
        Queue {
            answers: answers.into(),
            seen: Vec::new(),
        }
    }

    pub fn kinds(&self) -> Vec<PromptKind> {
        self.seen.iter().map(|p| p.kind).collect()
    }
}

impl StudentIo for Queue {
    fn present(&mut self, prompt: &Prompt) -> Result<()> {
        self.seen.push(prompt.clone());
        Ok(())
    }

    fn receive(&mut self, _prompt: &Prompt) -> Result<Answer> {
        self.answers.pop_front().ok_or(Error::IoClosed)
    }
}

/// Straight transcription of the fitness loop: start from the worst case and
/// subtract one for every (tuple, known) pair that agrees on object,
/// equation and zone, counting only tuples whose variable exists.
pub fn brute_force_fitness(chromosome: &Chromosome, knowns: &[KnownEntry]) -> u32 {
    // variables per equation in the bundled domain
    let lengths = [0usize, 5, 4, 3];
    let tuples = chromosome.len() / 12;
    let mut f = (tuples * 5) as i64;
    for i in 0..tuples {
        let bits = chromosome.bits();
        let field = |k: usize| -> u8 {
            (0..3).fold(0u8, |acc, b| (acc << 1) | bits[i * 12 + k * 3 + b] as u8)
        };
        let (n, e, v, z) = (field(0), field(1), field(2), field(3));
        let valid = (1..=3).contains(&e) && v >= 1 && (v as usize) <= lengths[e as usize];
        if !valid {
            continue;
        }
        for k in knowns {
            if k.object == n && k.eqn == e && k.zone == z {
                f -= 1;
            }
        }
    }
    f.max(0) as u32
}

pub fn car_stores() -> Stores {
    let mut stores = Stores::default();
    stores.objects.register(1, "a car").unwrap();
    stores.objects.close();
    stores
        .zones
        .register(1, 1, "accelerating away from the stop light")
        .unwrap();
    stores
}

pub fn known(d: &Domain, eqn: u8, var: VariableId, zone: u8, response: &str) -> KnownEntry {
    KnownEntry::new(d, 1, eqn, var, zone, response, Provenance::Student).unwrap()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Want {
    Rejected(u8),
    Answered(usize),
    Declined,
}

pub struct RuleCase {
    pub name: &'static str,
    pub stores: Stores,
    pub tuple: QuadTuple,
    pub answers: Vec<Answer>,
    pub want: Want,
    pub prompts: Vec<PromptKind>,
    pub closed_after: bool,
}

/// Curated (tuple, store state) cases covering each rule and the order in
/// which they are tried.
pub fn rule_cases() -> Vec<RuleCase> {
    use PromptKind::*;
    use VariableId as V;
    let d = Domain::bundled();
    let with = |entries: Vec<KnownEntry>| {
        let mut s = car_stores();
        for e in entries {
            s.knowns.insert(e).unwrap();
        }
        s
    };
    vec![
        RuleCase {
            name: "rule 1 skips a tuple that is already known",
            stores: with(vec![known(&d, 1, V::A, 1, "5 m/s^2")]),
            tuple: QuadTuple::new(1, 1, 5, 1),
            answers: vec![],
            want: Want::Rejected(1),
            prompts: vec![],
            closed_after: true,
        },
        RuleCase {
            name: "rule 2 rejects an unregistered object once the registry is closed",
            stores: car_stores(),
            tuple: QuadTuple::new(4, 1, 1, 1),
            answers: vec![],
            want: Want::Rejected(2),
            prompts: vec![],
            closed_after: true,
        },
        RuleCase {
            name: "rule 2 asks for an object then the stop-question",
            stores: Stores::default(),
            tuple: QuadTuple::new(1, 1, 1, 1),
            answers: vec![Answer::text("a car"), Answer::no(), Answer::no()],
            want: Want::Declined,
            prompts: vec![NewObject, MoreObjects, KnowVariable],
            closed_after: true,
        },
        RuleCase {
            name: "rule 2 closes the registry when no object is offered",
            stores: Stores::default(),
            tuple: QuadTuple::new(1, 1, 1, 1),
            answers: vec![Answer::no()],
            want: Want::Rejected(2),
            prompts: vec![NewObject],
            closed_after: true,
        },
        RuleCase {
            name: "rule 2 is tried before rule 3",
            stores: Stores::default(),
            tuple: QuadTuple::new(1, 0, 1, 1),
            answers: vec![Answer::text("a car"), Answer::yes()],
            want: Want::Rejected(3),
            prompts: vec![NewObject, MoreObjects],
            closed_after: false,
        },
        RuleCase {
            name: "rule 3 rejects equation 0",
            stores: car_stores(),
            tuple: QuadTuple::new(1, 0, 1, 1),
            answers: vec![],
            want: Want::Rejected(3),
            prompts: vec![],
            closed_after: true,
        },
        RuleCase {
            name: "rule 3 rejects equations past the last one",
            stores: car_stores(),
            tuple: QuadTuple::new(1, 4, 1, 1),
            answers: vec![],
            want: Want::Rejected(3),
            prompts: vec![],
            closed_after: true,
        },
        RuleCase {
            name: "rule 3 rejects variable 0",
            stores: car_stores(),
            tuple: QuadTuple::new(1, 2, 0, 1),
            answers: vec![],
            want: Want::Rejected(3),
            prompts: vec![],
            closed_after: true,
        },
        RuleCase {
            name: "rule 3 rejects variables past the equation length",
            stores: car_stores(),
            tuple: QuadTuple::new(1, 3, 4, 1),
            answers: vec![],
            want: Want::Rejected(3),
            prompts: vec![],
            closed_after: true,
        },
        RuleCase {
            name: "rule 4 describes a new zone and inserts without a caution",
            stores: with(vec![known(&d, 1, V::Dt, 1, "8 s")]),
            tuple: QuadTuple::new(1, 1, 5, 2),
            answers: vec![Answer::text("0 m/s^2"), Answer::text("coasting")],
            want: Want::Answered(2),
            prompts: vec![KnowVariable, ZoneDescription],
            closed_after: true,
        },
        RuleCase {
            name: "rule 5 lodges a shared variable in every equation holding it",
            stores: car_stores(),
            tuple: QuadTuple::new(1, 1, 4, 1),
            answers: vec![Answer::text("8 s")],
            want: Want::Answered(3),
            prompts: vec![KnowVariable],
            closed_after: true,
        },
        RuleCase {
            name: "rule 6 solves the last unknown after cautions",
            stores: with(vec![
                known(&d, 1, V::X0, 1, "0 m"),
                known(&d, 1, V::V0x, 1, "0 m/s"),
                known(&d, 1, V::A, 1, "5 m/s^2"),
            ]),
            tuple: QuadTuple::new(1, 1, 4, 1),
            answers: vec![
                Answer::text("8 s"),
                Answer::yes(),
                Answer::yes(),
                Answer::yes(),
            ],
            want: Want::Answered(4),
            prompts: vec![
                KnowVariable,
                CautionConfirm,
                CautionConfirm,
                CautionConfirm,
                SolveAdvice,
            ],
            closed_after: true,
        },
        RuleCase {
            name: "a declined caution inserts nothing",
            stores: with(vec![known(&d, 1, V::A, 1, "5 m/s^2")]),
            tuple: QuadTuple::new(1, 1, 4, 1),
            answers: vec![Answer::text("8 s"), Answer::no()],
            want: Want::Declined,
            prompts: vec![KnowVariable, CautionConfirm],
            closed_after: true,
        },
    ]
}

/// Runs one case; `Err` describes the first mismatch.
pub fn check_rule_case(case: RuleCase) -> std::result::Result<(), String> {
    let d = Domain::bundled();
    let mut stores = case.stores.clone();
    let before = stores.knowns.len();
    let mut io = Queue::new(case.answers);
    let outcome = process_tuple(
        case.tuple,
        &mut stores,
        &d,
        &mut AskedMemo::default(),
        &mut io,
    )
    .map_err(|e| format!("{}: {e}", case.name))?;
    let got = match &outcome {
        TupleOutcome::Rejected(r) => Want::Rejected(r.number()),
        TupleOutcome::Answered(v) => Want::Answered(v.len()),
        TupleOutcome::Declined => Want::Declined,
        TupleOutcome::Deferred => return Err(format!("{}: unexpectedly deferred", case.name)),
    };
    if got != case.want {
        return Err(format!(
            "{}: wanted {:?}, got {:?}",
            case.name, case.want, got
        ));
    }
    if io.kinds() != case.prompts {
        return Err(format!(
            "{}: wanted prompts {:?}, got {:?}",
            case.name,
            case.prompts,
            io.kinds()
        ));
    }
    if !io.answers.is_empty() {
        return Err(format!(
            "{}: {} answers unused",
            case.name,
            io.answers.len()
        ));
    }
    if stores.objects.is_closed() != case.closed_after {
        return Err(format!(
            "{}: registry closed = {}",
            case.name,
            stores.objects.is_closed()
        ));
    }
    let grew = stores.knowns.len() - before;
    match case.want {
        Want::Answered(n) if grew != n => Err(format!("{}: store grew by {grew}", case.name)),
        Want::Rejected(_) | Want::Declined if grew != 0 => {
            Err(format!("{}: store grew by {grew}", case.name))
        }
        _ => Ok(()),
    }
}

/// The engine zone whose description is `description`.
pub fn zone_named(stores: &Stores, object: u8, description: &str) -> Option<u8> {
    stores
        .zones
        .iter()
        .find(|(o, _, d)| *o == object && *d == description)
        .map(|(_, z, _)| z)
}

pub fn knowns_vec(store: &KnownsStore) -> Vec<KnownEntry> {
    store.iter().cloned().collect()
}
