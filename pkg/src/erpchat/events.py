"""Ordered event records describing what the agent did during a turn."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

EVENT_KINDS = (
    "intent_assessed",
    "clarification_requested",
    "sql_attempt",
    "execution_result",
    "critique",
    "final_sql",
    "answer",
    "error",
)


@dataclass(frozen=True)
class AgentEvent:
    kind: str
    payload: dict
    timestamp: float = field(default_factory=time.time)

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {self.kind!r}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "payload": self.payload, "timestamp": self.timestamp}

    @classmethod
    def from_dict(cls, data: dict) -> "AgentEvent":
        return cls(kind=data["kind"], payload=data["payload"], timestamp=data["timestamp"])

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False)
