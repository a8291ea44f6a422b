"""Turn orchestration: intent triage, clarification gating, agent dispatch
and answer synthesis. Every turn terminates with a user-facing reply and an
ordered event trail, whatever goes wrong inside."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from .events import AgentEvent
from .extract import (
    ExtractionTarget,
    FieldSpec,
    NoBlocks,
    ShapeViolation,
    parse_fences,
    parse_into,
    select_block,
)
from .gateway import Author, ChatMessage, GatewayError, Role
from .sandbox import render_preview
from .sqlagent import SqlAgentResult

log = logging.getLogger(__name__)

HISTORY_TURNS = 4

ASSESSMENT_TARGET = ExtractionTarget(
    name="intent_assessment",
    expected_tag="assessment",
    shape={
        "decision": FieldSpec(kind="enum", choices=("proceed", "clarify", "out_of_scope")),
        "normalized_intent": FieldSpec(kind="text", required=False),
        "clarification_question": FieldSpec(kind="text", required=False),
        "reason": FieldSpec(kind="text", required=False),
    },
)

FALLBACK_CLARIFICATION = (
    "I could not pin down what you are asking. Could you restate the question, "
    "naming the figures or records you want to see?"
)

TRUNCATION_NOTE = "Note: the preview above is truncated; more rows exist."


@dataclass(frozen=True)
class IntentAssessment:
    decision: str  # 'proceed' | 'clarify' | 'out_of_scope'
    normalized_intent: str | None
    clarification_question: str | None
    reason: str

    def __post_init__(self):
        if self.decision == "proceed" and not self.normalized_intent:
            raise ValueError("proceed requires a normalized intent")
        if self.decision == "clarify" and not self.clarification_question:
            raise ValueError("clarify requires a question")
        if self.decision not in ("proceed", "clarify", "out_of_scope"):
            raise ValueError(f"unknown decision {self.decision!r}")


@dataclass
class TurnRecord:
    user_message: str
    events: list[AgentEvent]
    reply: str
    status: str  # 'answered' | 'clarifying' | 'refused' | 'failed'


@dataclass
class ConversationState:
    session_id: str
    turns: list[TurnRecord] = field(default_factory=list)
    # (intent carried so far, question we asked); at most one outstanding.
    pending_clarification: tuple[str, str] | None = None

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "pending_clarification": list(self.pending_clarification)
            if self.pending_clarification
            else None,
            "turns": [
                {
                    "user_message": t.user_message,
                    "events": [e.to_dict() for e in t.events],
                    "reply": t.reply,
                    "status": t.status,
                }
                for t in self.turns
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ConversationState":
        pending = data.get("pending_clarification")
        return cls(
            session_id=data["session_id"],
            pending_clarification=tuple(pending) if pending else None,
            turns=[
                TurnRecord(
                    user_message=t["user_message"],
                    events=[AgentEvent.from_dict(e) for e in t["events"]],
                    reply=t["reply"],
                    status=t["status"],
                )
                for t in data.get("turns", [])
            ],
        )


def merge_intent(original: str, reply: str) -> str:
    """Deterministic merge of a pending question's intent with the user's
    clarifying reply."""
    return f"{original}; clarified: {reply}"


def _fallback_answer(sql: str, outcome) -> str:
    """Deterministic reply used when the dialogue model cannot be reached."""
    preview = render_preview(outcome)
    shown = len(outcome.preview_rows)
    noun = "row" if shown == 1 else "rows"
    return (
        "I could not generate a narrative answer, so here is the result directly.\n\n"
        f"```sql\n{sql}\n```\n\n"
        f"{preview}\n\n"
        f"({shown} {noun} shown.)"
    )


class Orchestrator:
    def __init__(self, gateway, sql_agent, schema, prompts):
        self.gateway = gateway
        self.sql_agent = sql_agent
        self.schema = schema
        self.prompts = prompts

    def _history(self, state: ConversationState) -> str:
        lines: list[str] = []
        for turn in state.turns[-HISTORY_TURNS:]:
            lines.append(f"User: {turn.user_message}")
            lines.append(f"Assistant: {turn.reply}")
        return "\n".join(lines) or "(none)"

    def assess_intent(self, message: str, state: ConversationState) -> IntentAssessment:
        """Dialogue-model triage of the incoming message. A pending
        clarification folds into the intent first; anything unparsable
        degrades to another clarification, never to silent proceeding."""
        if state.pending_clarification:
            intent = merge_intent(state.pending_clarification[0], message)
        else:
            intent = message
        prompt = self.prompts.render(
            "intent",
            history=self._history(state),
            intent=intent,
            schema=self.schema.rendered,
        )
        try:
            completion = self.gateway.complete(
                Role.DIALOGUE, [ChatMessage(Author.USER, prompt)]
            )
            data = parse_into(
                ASSESSMENT_TARGET,
                select_block(
                    parse_fences(completion.text),
                    ASSESSMENT_TARGET,
                    transcript_tail=completion.text,
                    gateway=self.gateway,
                    template=self.prompts.load("extractor"),
                ),
            )
            return IntentAssessment(
                decision=data["decision"],
                normalized_intent=data.get("normalized_intent"),
                clarification_question=data.get("clarification_question"),
                reason=data.get("reason", ""),
            )
        except (NoBlocks, ShapeViolation, ValueError) as exc:
            log.warning("unparsable intent assessment (%s); asking to clarify", exc)
            return IntentAssessment(
                decision="clarify",
                normalized_intent=None,
                clarification_question=FALLBACK_CLARIFICATION,
                reason="the assessment could not be parsed",
            )

    def synthesize_answer(self, intent: str, sql: str, outcome) -> str:
        """Dialogue-model summary of the result; falls back to a
        deterministic SQL-plus-preview rendering when the model is
        unreachable. A truncated preview always gets called out."""
        row_note = (
            f"first {len(outcome.preview_rows)} rows, truncated"
            if outcome.truncated
            else f"{len(outcome.preview_rows)} rows, complete"
        )
        prompt = self.prompts.render(
            "answer",
            intent=intent,
            sql=sql,
            preview=render_preview(outcome),
            row_note=row_note,
        )
        try:
            completion = self.gateway.complete(
                Role.DIALOGUE, [ChatMessage(Author.USER, prompt)]
            )
            reply = completion.text.strip()
        except GatewayError as exc:
            log.warning("answer synthesis failed (%s); using fallback", exc)
            reply = _fallback_answer(sql, outcome)
        if outcome.truncated and "truncat" not in reply.lower():
            reply += f"\n\n{TRUNCATION_NOTE}"
        return reply

    def handle_turn(self, state: ConversationState, message: str, on_event=None):
        """Runs one conversation turn; returns (reply, status, events) and
        mutates ``state`` (turn appended, pending clarification updated)."""
        events: list[AgentEvent] = []

        def emit(kind: str, payload: dict) -> None:
            event = AgentEvent(kind=kind, payload=payload)
            events.append(event)
            if on_event is not None:
                on_event(event)

        try:
            reply, status = self._run_turn(state, message, emit)
        except Exception as exc:  # noqa: BLE001 - a turn must always terminate
            log.exception("turn failed")
            emit("error", {"stage": "turn", "detail": str(exc)})
            reply = (
                "Something went wrong while answering this question, so I am "
                "stopping here rather than guessing. Please try again."
            )
            emit("answer", {"text": reply})
            status = "failed"
            state.pending_clarification = None
        state.turns.append(TurnRecord(message, events, reply, status))
        return reply, status, events

    def _run_turn(self, state, message, emit):
        assessment = self.assess_intent(message, state)
        payload = {"decision": assessment.decision, "reason": assessment.reason}
        if assessment.normalized_intent:
            payload["normalized_intent"] = assessment.normalized_intent
        if assessment.clarification_question:
            payload["clarification_question"] = assessment.clarification_question
        emit("intent_assessed", payload)

        if assessment.decision == "clarify":
            carried = (
                merge_intent(state.pending_clarification[0], message)
                if state.pending_clarification
                else message
            )
            state.pending_clarification = (carried, assessment.clarification_question)
            emit("clarification_requested", {"question": assessment.clarification_question})
            return assessment.clarification_question, "clarifying"

        state.pending_clarification = None

        if assessment.decision == "out_of_scope":
            scope = self.schema.semantic.introduction.strip().split("\n")[0]
            reply = (
                f"That falls outside what I can answer. My scope: {scope} "
                f"{assessment.reason}".strip()
            )
            emit("answer", {"text": reply})
            return reply, "refused"

        result: SqlAgentResult = self.sql_agent.run(
            assessment.normalized_intent, self.schema, on_event=emit
        )
        if result.status == "answered":
            reply = self.synthesize_answer(
                assessment.normalized_intent, result.final_query.sql, result.outcome
            )
            emit("answer", {"text": reply})
            return reply, "answered"
        if result.status == "exhausted_critic":
            reply = self.synthesize_answer(
                assessment.normalized_intent, result.final_query.sql, result.outcome
            )
            reply += (
                "\n\nCaveat: the automatic reviewer still had reservations about "
                "this query, so treat the result with care."
            )
            emit("answer", {"text": reply})
            return reply, "answered"
        if result.status == "policy_violation":
            emit("error", {"stage": "policy", "detail": "the generated statement was not a read-only SELECT"})
            reply = (
                "I declined to run the generated statement because it would not "
                "have been a read-only query. Nothing was executed or changed."
            )
            emit("answer", {"text": reply})
            return reply, "failed"
        # exhausted_reasoner
        emit("error", {
            "stage": "sql_generation",
            "detail": f"no working query after {result.attempts_used_per_round[-1]} attempts",
        })
        reply = (
            "I was unable to produce a working query for this question after "
            "several attempts. Rephrasing it, or naming the tables you care "
            "about, may help."
        )
        emit("answer", {"text": reply})
        return reply, "failed"
