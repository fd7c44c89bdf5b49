mod common;

use common::*;
use socratic_ga::domain::{Domain, QuadTuple};
use socratic_ga::engine::{process_tuple, Answer, AskedMemo, PromptKind, TupleOutcome};

#[test]
fn curated_rule_table() {
    let failures: Vec<String> = rule_cases()
        .into_iter()
        .filter_map(|c| check_rule_case(c).err())
        .collect();
    assert!(failures.is_empty(), "{failures:#?}");
}

#[test]
fn declined_question_is_not_repeated_within_a_generation() {
    let d = Domain::bundled();
    let mut stores = car_stores();
    let mut memo = AskedMemo::default();
    let mut io = Queue::new(vec![Answer::no()]);
    let first = process_tuple(
        QuadTuple::new(1, 1, 4, 1),
        &mut stores,
        &d,
        &mut memo,
        &mut io,
    )
    .unwrap();
    assert_eq!(first, TupleOutcome::Declined);
    // same quantity reached through a different equation
    let again = process_tuple(
        QuadTuple::new(1, 3, 1, 1),
        &mut stores,
        &d,
        &mut memo,
        &mut io,
    )
    .unwrap();
    assert_eq!(again, TupleOutcome::Deferred);
    assert_eq!(io.kinds(), vec![PromptKind::KnowVariable]);

    memo.clear();
    let mut io = Queue::new(vec![Answer::text("8 s")]);
    let later = process_tuple(
        QuadTuple::new(1, 3, 1, 1),
        &mut stores,
        &d,
        &mut memo,
        &mut io,
    )
    .unwrap();
    assert!(matches!(later, TupleOutcome::Answered(_)));
}

#[test]
fn second_object_brings_a_meeting_notice() {
    let d = Domain::bundled();
    let mut stores = socratic_ga::Stores::default();
    let mut memo = AskedMemo::default();
    let mut io = Queue::new(vec![
        Answer::text("a car"),
        Answer::yes(),
        Answer::no(),
        Answer::text("a truck"),
        Answer::no(),
        Answer::no(),
    ]);
    process_tuple(
        QuadTuple::new(1, 1, 1, 1),
        &mut stores,
        &d,
        &mut memo,
        &mut io,
    )
    .unwrap();
    process_tuple(
        QuadTuple::new(2, 1, 1, 1),
        &mut stores,
        &d,
        &mut memo,
        &mut io,
    )
    .unwrap();
    let info = io
        .kinds()
        .iter()
        .filter(|k| **k == PromptKind::Info)
        .count();
    assert_eq!(info, 1);
    assert!(stores.objects.is_closed());
    assert_eq!(stores.objects.len(), 2);
}
