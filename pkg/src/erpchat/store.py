"""Durable session storage: an append-only NDJSON record log per session,
a JSON session index, and the serialized conversation state.

Records are flushed to disk before any subscriber sees them, so a crash
never leaves a streamed-but-unpersisted event behind.
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
from dataclasses import dataclass
from pathlib import Path

from .orchestrator import ConversationState

RECORD_KINDS = ("user_message", "agent_event", "reply")


class StoreError(Exception):
    pass


class UnknownSession(StoreError):
    def __init__(self, session_id: str):
        super().__init__(f"unknown session '{session_id}'")
        self.session_id = session_id


class TurnInProgress(StoreError):
    def __init__(self, session_id: str):
        super().__init__(f"session '{session_id}' is already processing a turn")
        self.session_id = session_id


class StorageFailure(StoreError):
    pass


@dataclass(frozen=True)
class StoredRecord:
    index: int
    kind: str
    data: dict
    timestamp: float

    def to_wire(self) -> dict:
        return {
            "index": self.index,
            "kind": self.kind,
            "data": self.data,
            "timestamp": self.timestamp,
        }


class SessionStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        try:
            self.root.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise StorageFailure(f"cannot create storage directory {root}: {exc}") from exc
        self._lock = threading.Lock()
        self._records: dict[str, list[StoredRecord]] = {}
        self._conditions: dict[str, threading.Condition] = {}
        self._turn_locks: dict[str, threading.Lock] = {}
        self._index = self._load_index()
        for session_id in self._index:
            self._records[session_id] = self._load_records(session_id)

    # -- paths ------------------------------------------------------------

    def _index_path(self) -> Path:
        return self.root / "sessions.json"

    def _log_path(self, session_id: str) -> Path:
        return self.root / f"{session_id}.records.ndjson"

    def _state_path(self, session_id: str) -> Path:
        return self.root / f"{session_id}.state.json"

    # -- index ------------------------------------------------------------

    def _load_index(self) -> dict[str, dict]:
        path = self._index_path()
        if not path.exists():
            return {}
        try:
            return json.loads(path.read_text("utf-8"))
        except (OSError, ValueError) as exc:
            raise StorageFailure(f"cannot read session index: {exc}") from exc

    def _write_index(self) -> None:
        path = self._index_path()
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(self._index, indent=2, sort_keys=True), "utf-8")
        os.replace(tmp, path)

    def _load_records(self, session_id: str) -> list[StoredRecord]:
        path = self._log_path(session_id)
        records: list[StoredRecord] = []
        if not path.exists():
            return records
        with path.open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                raw = json.loads(line)
                records.append(
                    StoredRecord(
                        index=len(records),
                        kind=raw["kind"],
                        data=raw["data"],
                        timestamp=raw["timestamp"],
                    )
                )
        return records

    # -- sessions ----------------------------------------------------------

    def create_session(self, title: str | None = None) -> str:
        session_id = uuid.uuid4().hex[:12]
        with self._lock:
            self._index[session_id] = {
                "created_at": time.time(),
                "title": title or "",
            }
            try:
                self._write_index()
                self._log_path(session_id).touch()
            except OSError as exc:
                self._index.pop(session_id, None)
                raise StorageFailure(f"cannot persist new session: {exc}") from exc
            self._records[session_id] = []
        state = ConversationState(session_id=session_id)
        self.save_state(state)
        return session_id

    def list_sessions(self) -> list[dict]:
        with self._lock:
            return sorted(
                (
                    {"session_id": sid, **meta}
                    for sid, meta in self._index.items()
                ),
                key=lambda item: item["created_at"],
            )

    def has_session(self, session_id: str) -> bool:
        with self._lock:
            return session_id in self._index

    def require_session(self, session_id: str) -> None:
        if not self.has_session(session_id):
            raise UnknownSession(session_id)

    def set_title(self, session_id: str, title: str) -> None:
        with self._lock:
            if session_id not in self._index:
                raise UnknownSession(session_id)
            if not self._index[session_id]["title"]:
                self._index[session_id]["title"] = title
                self._write_index()

    # -- turn serialization -------------------------------------------------

    def turn_lock(self, session_id: str) -> threading.Lock:
        self.require_session(session_id)
        with self._lock:
            return self._turn_locks.setdefault(session_id, threading.Lock())

    # -- records -------------------------------------------------------------

    def _condition(self, session_id: str) -> threading.Condition:
        with self._lock:
            return self._conditions.setdefault(session_id, threading.Condition())

    def append(self, session_id: str, kind: str, data: dict) -> StoredRecord:
        """Appends one record, fsyncs it, then wakes streaming readers."""
        if kind not in RECORD_KINDS:
            raise ValueError(f"unknown record kind {kind!r}")
        self.require_session(session_id)
        condition = self._condition(session_id)
        with condition:
            records = self._records[session_id]
            record = StoredRecord(
                index=len(records), kind=kind, data=data, timestamp=time.time()
            )
            line = json.dumps(
                {"kind": record.kind, "data": record.data, "timestamp": record.timestamp},
                ensure_ascii=False,
                sort_keys=True,
            )
            try:
                with self._log_path(session_id).open("a", encoding="utf-8") as fh:
                    fh.write(line + "\n")
                    fh.flush()
                    os.fsync(fh.fileno())
            except OSError as exc:
                raise StorageFailure(f"cannot append session record: {exc}") from exc
            records.append(record)
            condition.notify_all()
        return record

    def records(self, session_id: str, after: int = -1) -> list[StoredRecord]:
        self.require_session(session_id)
        condition = self._condition(session_id)
        with condition:
            return [r for r in self._records[session_id] if r.index > after]

    def wait_for_records(
        self, session_id: str, after: int, timeout_s: float
    ) -> list[StoredRecord]:
        """Blocks until a record newer than ``after`` exists or the timeout
        passes; returns the new records (possibly empty)."""
        condition = self._condition(session_id)
        deadline = time.monotonic() + timeout_s
        with condition:
            while True:
                fresh = [r for r in self._records[session_id] if r.index > after]
                if fresh:
                    return fresh
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    return []
                condition.wait(remaining)

    # -- conversation state ---------------------------------------------------

    def save_state(self, state: ConversationState) -> None:
        path = self._state_path(state.session_id)
        tmp = path.with_suffix(".tmp")
        try:
            tmp.write_text(
                json.dumps(state.to_dict(), ensure_ascii=False, sort_keys=True), "utf-8"
            )
            os.replace(tmp, path)
        except OSError as exc:
            raise StorageFailure(f"cannot persist conversation state: {exc}") from exc

    def load_state(self, session_id: str) -> ConversationState:
        self.require_session(session_id)
        path = self._state_path(session_id)
        if not path.exists():
            return ConversationState(session_id=session_id)
        try:
            return ConversationState.from_dict(json.loads(path.read_text("utf-8")))
        except (OSError, ValueError, KeyError) as exc:
            raise StorageFailure(f"cannot load conversation state: {exc}") from exc

    def transcript(self, session_id: str) -> dict:
        """Session view built from durable state: metadata plus every turn
        with its events."""
        self.require_session(session_id)
        state = self.load_state(session_id)
        with self._lock:
            meta = dict(self._index[session_id])
        return {
            "session_id": session_id,
            "created_at": meta["created_at"],
            "title": meta["title"],
            "pending_clarification": list(state.pending_clarification)
            if state.pending_clarification
            else None,
            "turns": [
                {
                    "user_message": turn.user_message,
                    "events": [e.to_dict() for e in turn.events],
                    "reply": turn.reply,
                    "status": turn.status,
                }
                for turn in state.turns
            ],
        }
