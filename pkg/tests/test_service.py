"""Tests for the HTTP session service: endpoint contracts, the pause
semantics around open questions, and record/replay equivalence with the
headless runner."""
import json

import pytest
from fastapi.testclient import TestClient

from kdstream import Engine, HierarchyError, KdEdit, RunConfig
from kdstream.hierarchy import ConceptHierarchy
from kdstream.service import create_app


@pytest.fixture
def client(tmp_path):
    return TestClient(create_app(tmp_path))


SHORT = {"method": "trckd_interactive", "stream_length": 40, "holdout_size": 8,
         "eval_seeds": [0]}


def drain(client, sid, since=-1):
    """Poll until finished or paused; return (all new events, final state)."""
    events, state = [], None
    while True:
        res = client.get(f"/sessions/{sid}/events", params={"since": since})
        assert res.status_code == 200
        body = res.json()
        events.extend(body["events"])
        state = body["state"]
        if body["events"]:
            since = body["events"][-1]["cursor"]
        if state in ("paused-at-question", "finished"):
            return events, state, since


# -- session lifecycle -------------------------------------------------------------


def test_create_and_finish_session(client):
    res = client.post("/sessions", json={"config": SHORT})
    assert res.status_code == 201
    sid = res.json()["id"]

    events, state, _ = drain(client, sid)
    assert state == "finished"
    assert events[0]["type"] == "init"
    assert events[-1]["type"] == "finished"
    assert sum(e["type"] == "metric" for e in events) == SHORT["stream_length"]

    info = client.get(f"/sessions/{sid}").json()
    assert info == {"id": sid, "state": "finished", "iteration": 40, "interactions": 0}


def test_events_cursor_is_incremental(client):
    sid = client.post("/sessions", json={"config": SHORT}).json()["id"]
    first = client.get(f"/sessions/{sid}/events", params={"since": -1}).json()["events"]
    cursor = first[-1]["cursor"]
    again = client.get(f"/sessions/{sid}/events", params={"since": cursor}).json()["events"]
    assert not again
    assert [e["cursor"] for e in first] == list(range(len(first)))


def test_create_rejects_non_interactive_method(client):
    res = client.post("/sessions", json={"config": {**SHORT, "method": "mw_knn"}})
    assert res.status_code == 422
    assert "trckd_interactive" in res.json()["detail"]


def test_create_rejects_unknown_config_key(client):
    res = client.post("/sessions", json={"config": {**SHORT, "bogus": 1}})
    assert res.status_code == 422


def test_unknown_session_is_404(client):
    assert client.get("/sessions/nope").status_code == 404
    assert client.get("/sessions/nope/events").status_code == 404
    assert client.post("/sessions/nope/answer", json={}).status_code == 404


def test_answer_without_question_is_409(client):
    sid = client.post("/sessions", json={"config": SHORT}).json()["id"]
    drain(client, sid)
    res = client.post(f"/sessions/{sid}/answer", json={"edits": [], "deselected": []})
    assert res.status_code == 409


def test_hierarchy_endpoint(client):
    sid = client.post("/sessions", json={"config": SHORT}).json()["id"]
    payload = client.get(f"/sessions/{sid}/hierarchy").json()
    h = ConceptHierarchy.from_json(payload)
    assert h.root in h.concepts
    assert len(h.concepts) == 7


def test_event_log_persisted(tmp_path):
    client = TestClient(create_app(tmp_path))
    sid = client.post("/sessions", json={"config": SHORT}).json()["id"]
    events, _, _ = drain(client, sid)
    on_disk = [json.loads(l) for l in (tmp_path / f"{sid}.jsonl").read_text().splitlines()]
    assert on_disk == events


# -- questions, answers, and the pause contract --------------------------------------

QUESTION_CFG = {"method": "trckd_interactive", "k": 3, "eval_seeds": [1],
                "schedule": [{"t": 170, "kind": "relation_addition"}]}


def pick_relation_edit(h: ConceptHierarchy) -> KdEdit:
    """First (child, parent) pair in sorted order whose addition is legal."""
    for child in sorted(h.concepts):
        for parent in sorted(h.concepts):
            if child == parent or (child, parent) in h.edges:
                continue
            try:
                h.add_relation(child, parent)
            except HierarchyError:
                continue
            return KdEdit.relation_add(child, parent)
    raise AssertionError("hierarchy admits no relation addition")


def scripted_answer(n: int, h: ConceptHierarchy) -> tuple[list[KdEdit], list[str]]:
    """Question n: 1 -> confirm, 2 -> deselect everything, 3 -> add a relation,
    later -> confirm. `deselect everything` is resolved by the caller."""
    if n == 3:
        return [pick_relation_edit(h)], []
    return [], []


def test_malformed_and_invalid_answers(client):
    sid = client.post("/sessions", json={"config": QUESTION_CFG}).json()["id"]
    _, state, _ = drain(client, sid)
    assert state == "paused-at-question"
    res = client.post(f"/sessions/{sid}/answer", json={"edits": [{"concept": "c1"}]})
    assert res.status_code == 422 and "malformed" in res.json()["detail"]
    res = client.post(f"/sessions/{sid}/answer",
                      json={"edits": [{"kind": "concept_drift", "concept": "ghost"}]})
    assert res.status_code == 422 and "invalid edits" in res.json()["detail"]
    # the question is still open after rejected answers
    assert client.get(f"/sessions/{sid}").json()["state"] == "paused-at-question"


def test_replay_matches_headless_runner(client):
    """A session answered over HTTP (confirm, deselect-all, relation addition,
    then confirms) must produce exactly the records of a headless run whose
    scripted user gives the same answers."""
    counter = {"n": 0}

    def headless_user(engine, desc):
        counter["n"] += 1
        edits, _ = scripted_answer(counter["n"], engine.machine_h)
        deselected = set(desc.flagged) if counter["n"] == 2 else set()
        return edits, deselected

    cfg = RunConfig.from_json(QUESTION_CFG)
    headless = Engine(cfg, seed=1, user=headless_user)
    headless.run_to_completion()
    assert counter["n"] >= 3, "scenario needs at least three questions"

    sid = client.post("/sessions", json={"config": QUESTION_CFG}).json()["id"]
    events, state, since = drain(client, sid)
    questions = 0
    while state == "paused-at-question":
        questions += 1
        question = next(e for e in reversed(events) if e["type"] == "question")
        h = ConceptHierarchy.from_json(client.get(f"/sessions/{sid}/hierarchy").json())
        edits, _ = scripted_answer(questions, h)
        deselected = question["description"]["flagged"] if questions == 2 else []
        res = client.post(f"/sessions/{sid}/answer",
                          json={"edits": [e.to_json() for e in edits],
                                "deselected": deselected})
        assert res.status_code == 200
        new, state, since = drain(client, sid, since)
        events.extend(new)
    assert state == "finished"
    assert questions == counter["n"]

    # identical metric records, iteration by iteration
    service_metrics = [(e["t"], e["micro_f1"], e["interactions"])
                       for e in events if e["type"] == "metric"]
    headless_metrics = [(r.t, r.micro_f1, r.interactions) for r in headless.records]
    assert service_metrics == headless_metrics

    # pause contract: no metric may be emitted between a question and its answer
    open_q = False
    for e in events:
        if e["type"] == "question":
            open_q = True
        elif e["type"] == "answer":
            open_q = False
        elif e["type"] == "metric":
            assert not open_q, f"metric emitted while question open at t={e['t']}"
