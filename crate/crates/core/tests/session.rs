mod common;

use common::*;
use socratic_ga::domain::{Domain, QuadTuple, VariableId};
use socratic_ga::engine::{Answer, PromptKind};
use socratic_ga::events::{read_jsonl, replay_knowns, write_jsonl};
use socratic_ga::session::organizational_phase;
use socratic_ga::stores::{KnownEntry, Provenance, Stores};
use socratic_ga::{
    Chromosome, Error, EventRecord, GaConfig, Mode, Population, ProblemScript, ScriptedStudent,
    Session, SessionStatus, Turn,
};

fn small(mode: Mode) -> GaConfig {
    GaConfig {
        population_size: 10,
        mode,
        ..GaConfig::default()
    }
}

fn car_run(seed: u64, mode: Mode) -> Session {
    let mut student = ScriptedStudent::new(ProblemScript::car());
    Session::new(small(mode), seed, Domain::bundled())
        .unwrap()
        .run_session(&mut student)
        .unwrap()
}

#[test]
fn zero_generations_exhausts_without_prompts() {
    let config = GaConfig {
        max_generations: 0,
        ..small(Mode::Ga)
    };
    let mut io = Queue::default();
    let s = Session::new(config, 1, Domain::bundled())
        .unwrap()
        .run_session(&mut io)
        .unwrap();
    assert_eq!(s.status(), SessionStatus::Exhausted);
    assert!(io.seen.is_empty());
    assert!(s.events().is_empty());
}

#[test]
fn fully_rejected_generation_is_unproductive() {
    let config = GaConfig {
        population_size: 2,
        chromosome_bits: 120,
        max_generations: 1,
        ..GaConfig::default()
    };
    let member = Chromosome::from_tuples(&[QuadTuple::new(2, 0, 0, 0); 10]);
    let population = Population {
        members: vec![member.clone(), member],
        generation: 1,
        rng_seed: 0,
    };
    let mut io = Queue::new(vec![Answer::no()]);
    let mut s = Session::from_population(config, 0, Domain::bundled(), population)
        .unwrap()
        .with_target_variable(VariableId::X);
    let summary = s.run_generation(&mut io).unwrap();
    assert!(!summary.productive);
    assert_eq!(summary.responses, 0);
    assert_eq!(io.kinds(), vec![PromptKind::NewObject]);
    let s = s.run_session(&mut io).unwrap();
    assert_eq!(s.status(), SessionStatus::Exhausted);
}

#[test]
fn scripted_car_solves_in_both_modes() {
    for mode in [Mode::Ga, Mode::RandomControl] {
        for seed in 1..=3 {
            let s = car_run(seed, mode);
            assert_eq!(s.status(), SessionStatus::Solved, "{mode:?} seed {seed}");
            let coasting = zone_named(s.stores(), s.target().unwrap().object, "coasting").unwrap();
            let target = s.target().unwrap();
            assert_eq!((target.variable, target.zone), (VariableId::X, coasting));
            let x = s
                .stores()
                .knowns
                .first_with_symbol(target.object, coasting, VariableId::X)
                .unwrap();
            assert_eq!(x.provenance, Provenance::SolvedAlgebraically);
        }
    }
}

#[test]
fn log_invariants_hold() {
    let s = car_run(4, Mode::Ga);
    let events = s.events();
    for (i, e) in events.iter().enumerate() {
        assert_eq!(e.seq, i as u64);
    }
    assert!(events
        .windows(2)
        .all(|w| w[0].generation <= w[1].generation));
    for g in 1..=s.generation() {
        let snaps = events
            .iter()
            .filter(|e| {
                e.generation == g && matches!(e.record, EventRecord::FitnessSnapshot { .. })
            })
            .count();
        assert_eq!(snaps, 1, "generation {g}");
    }
    assert_eq!(replay_knowns(events).unwrap(), s.stores().knowns);

    let mut buf = Vec::new();
    write_jsonl(events, &mut buf).unwrap();
    assert_eq!(read_jsonl(buf.as_slice()).unwrap(), events);
}

#[test]
fn run_generation_counts_answer_events() {
    let mut student = ScriptedStudent::new(ProblemScript::car());
    let mut s = Session::new(small(Mode::Ga), 5, Domain::bundled()).unwrap();
    let summary = s.run_generation(&mut student).unwrap();
    let answers = s
        .events()
        .iter()
        .filter(|e| {
            e.generation == summary.generation && matches!(e.record, EventRecord::Answer { .. })
        })
        .count();
    assert_eq!(summary.responses as usize, answers);
    assert!(summary.productive);
}

/// Drives a session through poll/respond, answering with the scripted student.
fn drive_by_turns(
    mut s: Session,
    student: &mut ScriptedStudent,
    stop_after: Option<usize>,
) -> Session {
    let mut asked = 0;
    loop {
        match s.poll().unwrap() {
            Turn::Say(_) => {}
            Turn::Ask(p) => {
                if stop_after == Some(asked) {
                    return s;
                }
                s.respond(student.answer(&p).unwrap()).unwrap();
                asked += 1;
            }
            Turn::Finished(_) => return s,
        }
    }
}

#[test]
fn turn_driving_matches_blocking_run() {
    let blocking = car_run(6, Mode::Ga);
    let mut student = ScriptedStudent::new(ProblemScript::car());
    let turned = drive_by_turns(
        Session::new(small(Mode::Ga), 6, Domain::bundled()).unwrap(),
        &mut student,
        None,
    );
    assert_eq!(turned.events(), blocking.events());
    assert_eq!(turned.status(), SessionStatus::Solved);
}

#[test]
fn snapshot_mid_session_resumes_identically() {
    let blocking = car_run(7, Mode::Ga);
    let mut student = ScriptedStudent::new(ProblemScript::car());
    let half = drive_by_turns(
        Session::new(small(Mode::Ga), 7, Domain::bundled()).unwrap(),
        &mut student,
        Some(9),
    );
    let json = serde_json::to_string(&half).unwrap();
    let restored: Session = serde_json::from_str(&json).unwrap();
    assert!(restored.pending().is_some());
    let done = drive_by_turns(restored, &mut student, None);
    assert_eq!(done.events(), blocking.events());
}

#[test]
fn answers_are_checked_against_the_pending_prompt() {
    let mut s = Session::new(small(Mode::Ga), 1, Domain::bundled()).unwrap();
    assert!(matches!(
        s.respond(Answer::yes()),
        Err(Error::NoPendingPrompt)
    ));
    let Turn::Ask(p) = s.poll().unwrap() else {
        panic!("expected the target question");
    };
    assert_eq!(p.kind, PromptKind::Target);
    assert!(matches!(
        s.respond(Answer::text("how far")),
        Err(Error::AnswerShape(_))
    ));
    assert!(s.pending().is_some());
    s.respond(Answer::text("x")).unwrap();
    // the answer is applied when the session next runs
    s.poll().unwrap();
    assert_eq!(s.target_variable(), Some(VariableId::X));
}

#[test]
fn closed_input_aborts() {
    let mut io = Queue::default();
    let s = Session::new(small(Mode::Ga), 1, Domain::bundled())
        .unwrap()
        .run_session(&mut io)
        .unwrap();
    assert_eq!(s.status(), SessionStatus::Aborted);
    assert!(s.is_finished());
}

fn two_zone_car() -> Stores {
    let d = Domain::bundled();
    let mut stores = Stores::default();
    stores.objects.register(1, "a car").unwrap();
    stores.objects.close();
    stores.zones.register(1, 0, "accelerating").unwrap();
    stores.zones.register(1, 7, "coasting").unwrap();
    for (eqn, var, r) in [(1, VariableId::X, "160 m"), (2, VariableId::Vx, "40 m/s")] {
        stores
            .knowns
            .insert(
                KnownEntry::new(&d, 1, eqn, var, 0, r, Provenance::SolvedAlgebraically).unwrap(),
            )
            .unwrap();
    }
    stores
}

#[test]
fn organizational_phase_orders_and_links_zones() {
    let d = Domain::bundled();
    let mut stores = two_zone_car();
    let mut io = Queue::new(vec![Answer::text("0, 7"), Answer::yes(), Answer::yes()]);
    let added = organizational_phase(&mut stores, &d, &mut io).unwrap();
    assert_eq!(
        io.kinds(),
        vec![
            PromptKind::ZoneOrder,
            PromptKind::ZoneLink,
            PromptKind::ZoneLink
        ]
    );
    assert_eq!(stores.zones.temporal_order(1), Some(&[0u8, 7][..]));
    let x0 = stores
        .knowns
        .first_with_symbol(1, 7, VariableId::X0)
        .unwrap();
    assert_eq!(
        (x0.provenance, x0.response.as_str()),
        (Provenance::ZoneLink, "← x from zone 0")
    );
    let v0x = stores
        .knowns
        .first_with_symbol(1, 7, VariableId::V0x)
        .unwrap();
    assert_eq!(v0x.response, "← v_x from zone 0");
    assert_eq!(v0x.eqn, 2);
    // v0x also reaches equation 1
    assert!(added
        .iter()
        .any(|k| k.symbol == VariableId::V0x && k.eqn == 1));

    // a second pass has nothing left to ask
    let mut io = Queue::default();
    assert!(organizational_phase(&mut stores, &d, &mut io)
        .unwrap()
        .is_empty());
    assert!(io.seen.is_empty());
}

#[test]
fn organizational_phase_skips_single_zones_and_remembers_refusals() {
    let d = Domain::bundled();
    let mut stores = car_stores();
    let mut io = Queue::default();
    assert!(organizational_phase(&mut stores, &d, &mut io)
        .unwrap()
        .is_empty());
    assert!(io.seen.is_empty());

    let mut stores = two_zone_car();
    let mut io = Queue::new(vec![Answer::text("0 7"), Answer::no(), Answer::no()]);
    assert!(organizational_phase(&mut stores, &d, &mut io)
        .unwrap()
        .is_empty());
    let mut io = Queue::default();
    assert!(organizational_phase(&mut stores, &d, &mut io)
        .unwrap()
        .is_empty());
    assert!(io.seen.is_empty());
}
