"""Smoke test for the socratic_tutor extension module."""

import json

import socratic_tutor as st


def main():
    assert st.decode_tuple(st.encode_tuple(1, 2, 3, 4)) == (1, 2, 3, 4)
    assert st.empty_store_fitness(7) == 5000

    result = st.run_scripted(seed=3)
    assert result["status"] == "solved", result
    assert result["metrics"]["solved_at"] is not None

    # Drive a session turn by turn with the scripted student.
    session = st.Session(seed=5)
    student = st.ScriptedStudent()
    turns = 0
    while True:
        turn = session.poll()
        if turn["turn"] == "finished":
            break
        if turn["turn"] == "ask":
            a = student.answer(turn["prompt"])
            session.respond(a["text"], a.get("affirmative"))
        turns += 1
        assert turns < 10000
    assert session.status == "solved", session.status
    assert session.knowns()
    assert session.metrics()["solved_at"] is not None

    restored = st.Session.from_json(session.to_json())
    assert restored.status == "solved"
    assert len(session.events_jsonl().splitlines()) == len(session.events())

    try:
        session.respond("x")
    except ValueError:
        pass
    else:
        raise AssertionError("respond without a pending question should fail")

    print("smoke test passed:", json.dumps({"generations": session.generation, "turns": turns}))


if __name__ == "__main__":
    main()
