import json
import threading

import pytest
from fastapi.testclient import TestClient

from erpchat.config import config_from_mapping
from erpchat.gateway import Role
from erpchat.orchestrator import ConversationState
from erpchat.runtime import Runtime
from erpchat.service import create_app
from erpchat.store import SessionStore, StorageFailure, TurnInProgress, UnknownSession

from conftest import APPROVED, assessment_proceed, build_stack, sql_reply

GOOD_SQL = "SELECT COUNT(*) AS unit_count FROM T_A"


class TestSessionStore:
    def test_create_and_list(self, tmp_path):
        store = SessionStore(tmp_path)
        sid = store.create_session("first question")
        assert store.has_session(sid)
        sessions = store.list_sessions()
        assert [s["session_id"] for s in sessions] == [sid]
        assert sessions[0]["title"] == "first question"

    def test_unknown_session_raises(self, tmp_path):
        store = SessionStore(tmp_path)
        with pytest.raises(UnknownSession):
            store.records("nope")
        with pytest.raises(UnknownSession):
            store.load_state("nope")

    def test_records_survive_reopen(self, tmp_path):
        store = SessionStore(tmp_path)
        sid = store.create_session()
        store.append(sid, "user_message", {"text": "hi"})
        store.append(sid, "reply", {"text": "hello", "status": "answered"})
        reopened = SessionStore(tmp_path)
        records = reopened.records(sid)
        assert [(r.index, r.kind) for r in records] == [(0, "user_message"), (1, "reply")]
        assert records[0].data == {"text": "hi"}

    def test_append_is_readable_before_notification_returns(self, tmp_path):
        # The record must be on disk by the time append() returns.
        store = SessionStore(tmp_path)
        sid = store.create_session()
        store.append(sid, "user_message", {"text": "hi"})
        raw = (tmp_path / f"{sid}.records.ndjson").read_text("utf-8").strip()
        assert json.loads(raw)["data"] == {"text": "hi"}

    def test_after_cursor_filters(self, tmp_path):
        store = SessionStore(tmp_path)
        sid = store.create_session()
        for i in range(4):
            store.append(sid, "user_message", {"text": str(i)})
        assert [r.data["text"] for r in store.records(sid, after=1)] == ["2", "3"]

    def test_wait_for_records_wakes_on_append(self, tmp_path):
        store = SessionStore(tmp_path)
        sid = store.create_session()
        got = []

        def waiter():
            got.extend(store.wait_for_records(sid, after=-1, timeout_s=5.0))

        thread = threading.Thread(target=waiter)
        thread.start()
        store.append(sid, "user_message", {"text": "wake"})
        thread.join(timeout=5.0)
        assert got and got[0].data["text"] == "wake"

    def test_state_round_trip(self, tmp_path):
        store = SessionStore(tmp_path)
        sid = store.create_session()
        state = ConversationState(session_id=sid)
        state.pending_clarification = ("orders?", "Which year?")
        store.save_state(state)
        loaded = store.load_state(sid)
        assert loaded.pending_clarification == ("orders?", "Which year?")

    def test_turn_lock_is_per_session(self, tmp_path):
        store = SessionStore(tmp_path)
        a, b = store.create_session(), store.create_session()
        lock_a = store.turn_lock(a)
        assert lock_a.acquire(blocking=False)
        try:
            assert store.turn_lock(b).acquire(blocking=False)
            store.turn_lock(b).release()
            assert store.turn_lock(a) is lock_a
        finally:
            lock_a.release()

    def test_unwritable_root_raises_storage_failure(self, tmp_path):
        blocker = tmp_path / "blocked"
        blocker.write_text("a file, not a directory", "utf-8")
        with pytest.raises(StorageFailure):
            SessionStore(blocker / "nested")


@pytest.fixture
def app_client(tmp_path, fixture_db, backend, schema_doc):
    config = config_from_mapping({
        "database_path": str(fixture_db),
        "storage_dir": str(tmp_path / "sessions"),
    })
    orchestrator = build_stack(fixture_db, backend, schema_doc)
    runtime = Runtime(
        config=config,
        gateway=orchestrator.gateway,
        schema=schema_doc,
        executor=orchestrator.sql_agent.executor,
        prompts=orchestrator.prompts,
        orchestrator=orchestrator,
        sql_agent=orchestrator.sql_agent,
    )
    app = create_app(config, runtime=runtime)
    with TestClient(app) as client:
        yield client, backend


def push_happy_turn(backend, answer="There are 12 units."):
    backend.push(Role.DIALOGUE, assessment_proceed("Count the units."))
    backend.push(Role.REASONER, sql_reply(GOOD_SQL))
    backend.push(Role.CRITIC, APPROVED)
    backend.push(Role.DIALOGUE, answer)


class TestHttpSurface:
    def test_healthz(self, app_client):
        client, _ = app_client
        response = client.get("/healthz")
        assert response.status_code == 200
        assert response.json()["status"] == "ok"

    def test_schema_endpoint_serves_markdown(self, app_client):
        client, _ = app_client
        response = client.get("/schema")
        assert response.status_code == 200
        assert response.headers["content-type"].startswith("text/markdown")
        assert "## High-Level Relationships" in response.text
        assert "## T_A (28 columns" in response.text

    def test_create_session_and_turn(self, app_client):
        client, backend = app_client
        sid = client.post("/sessions").json()["session_id"]
        push_happy_turn(backend)
        response = client.post(f"/sessions/{sid}/messages", json={"text": "how many units?"})
        assert response.status_code == 200
        body = response.json()
        assert body["reply"] == "There are 12 units."
        assert body["status"] == "answered"
        assert [e["kind"] for e in body["events"]] == [
            "intent_assessed", "sql_attempt", "execution_result",
            "critique", "final_sql", "answer",
        ]

    def test_unknown_session_404(self, app_client):
        client, _ = app_client
        assert client.get("/sessions/ghost").status_code == 404
        assert client.post("/sessions/ghost/messages", json={"text": "x"}).status_code == 404
        assert client.get("/sessions/ghost/events").status_code == 404

    def test_empty_text_422(self, app_client):
        client, _ = app_client
        sid = client.post("/sessions").json()["session_id"]
        assert client.post(f"/sessions/{sid}/messages", json={"text": "  "}).status_code == 422
        assert client.post(f"/sessions/{sid}/messages", json={}).status_code == 422

    def test_transcript_view(self, app_client):
        client, backend = app_client
        sid = client.post("/sessions").json()["session_id"]
        push_happy_turn(backend)
        client.post(f"/sessions/{sid}/messages", json={"text": "how many units?"})
        view = client.get(f"/sessions/{sid}").json()
        assert view["session_id"] == sid
        assert view["title"] == "how many units?"
        assert len(view["turns"]) == 1
        turn = view["turns"][0]
        assert turn["user_message"] == "how many units?"
        assert turn["status"] == "answered"
        assert [e["kind"] for e in turn["events"]][0] == "intent_assessed"

    def test_sessions_listing(self, app_client):
        client, _ = app_client
        first = client.post("/sessions").json()["session_id"]
        second = client.post("/sessions").json()["session_id"]
        listed = [s["session_id"] for s in client.get("/sessions").json()["sessions"]]
        assert listed == [first, second]

    def test_turn_in_progress_409(self, app_client):
        client, backend = app_client
        sid = client.post("/sessions").json()["session_id"]
        app = client.app
        store = app.state.store
        lock = store.turn_lock(sid)
        assert lock.acquire(blocking=False)  # simulate a running turn
        try:
            response = client.post(f"/sessions/{sid}/messages", json={"text": "hi"})
            assert response.status_code == 409
        finally:
            lock.release()

    def test_event_stream_replays_persisted_records(self, app_client):
        client, backend = app_client
        sid = client.post("/sessions").json()["session_id"]
        push_happy_turn(backend)
        client.post(f"/sessions/{sid}/messages", json={"text": "how many units?"})
        with client.stream("GET", f"/sessions/{sid}/events?follow=false") as response:
            assert response.status_code == 200
            payload = "".join(chunk for chunk in response.iter_text())
        frames = [f for f in payload.split("\n\n") if f.strip() and not f.startswith(":")]
        kinds = []
        for frame in frames:
            fields = dict(
                line.split(": ", 1) for line in frame.split("\n") if ": " in line
            )
            kinds.append(fields["event"])
            assert "data" in fields
        assert kinds[0] == "user_message"
        assert kinds[-1] == "reply"
        assert "agent_event" in kinds
        # ids are the record indexes, in order
        ids = [int(dict(l.split(": ", 1) for l in f.split("\n") if ": " in l)["id"])
               for f in frames]
        assert ids == list(range(len(frames)))

    def test_event_stream_resumes_after_cursor(self, app_client):
        client, backend = app_client
        sid = client.post("/sessions").json()["session_id"]
        push_happy_turn(backend)
        client.post(f"/sessions/{sid}/messages", json={"text": "how many units?"})
        with client.stream(
            "GET", f"/sessions/{sid}/events?follow=false",
            headers={"Last-Event-ID": "3"},
        ) as response:
            payload = "".join(response.iter_text())
        frames = [f for f in payload.split("\n\n") if f.strip()]
        first_id = int(frames[0].split("\n")[0].split(": ")[1])
        assert first_id == 4

    def test_clarification_survives_turns(self, app_client):
        client, backend = app_client
        sid = client.post("/sessions").json()["session_id"]
        backend.push(Role.DIALOGUE, (
            "```assessment\ndecision: clarify\n"
            "clarification_question: Which year?\nreason: ambiguous\n```"
        ))
        first = client.post(f"/sessions/{sid}/messages", json={"text": "orders recently?"})
        assert first.json()["status"] == "clarifying"
        view = client.get(f"/sessions/{sid}").json()
        assert view["pending_clarification"] == ["orders recently?", "Which year?"]
        push_happy_turn(backend, answer="21 orders in 2023.")
        second = client.post(f"/sessions/{sid}/messages", json={"text": "2023"})
        assert second.json()["status"] == "answered"
        assert client.get(f"/sessions/{sid}").json()["pending_clarification"] is None
