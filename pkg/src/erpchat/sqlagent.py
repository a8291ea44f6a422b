"""The SQL agent: bounded generate / execute / critique loops.

An inner self-debug loop gives the reasoner up to N attempts per round,
feeding execution errors back verbatim. An outer loop runs up to M critic
rounds; revision feedback seeds the next round. All model traffic lives in
one transcript so each step sees the full history.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

from .extract import (
    ExtractionError,
    ExtractionTarget,
    FieldSpec,
    NoBlocks,
    ShapeViolation,
    parse_fences,
    parse_into,
    select_block,
)
from .gateway import Author, ChatMessage, GatewayError, Role
from .sandbox import (
    ExecutionOutcome,
    MultipleStatements,
    NotSelect,
    ParseError,
    ValidatedSelect,
    render_cell,
    render_preview,
    validate_select,
)

log = logging.getLogger(__name__)

CRITIQUE_CATEGORIES = (
    "syntactic", "semantic", "readability", "efficiency", "result_conformance",
)

SQL_TARGET = ExtractionTarget(name="sql_query", expected_tag="sql")
VERDICT_TARGET = ExtractionTarget(
    name="critique_verdict",
    expected_tag="verdict",
    shape={
        "decision": FieldSpec(kind="enum", choices=("approved", "revise")),
        "issues": FieldSpec(kind="list", required=False),
    },
)


class SqlAgentError(Exception):
    pass


class NoSqlBlockFound(SqlAgentError):
    """The reasoner reply held no usable SQL block; counts as a failed attempt."""


class ExhaustedReasoner(SqlAgentError):
    def __init__(self, attempts: int, last_error: str | None):
        super().__init__(f"no working query after {attempts} attempts")
        self.attempts = attempts
        self.last_error = last_error


class PolicyViolation(SqlAgentError):
    """The model produced a non-SELECT statement; the turn aborts."""

    def __init__(self, sql: str, detail: str, attempt_index: int = 1):
        super().__init__(detail)
        self.sql = sql
        self.detail = detail
        self.attempt_index = attempt_index


class UnparsableVerdict(SqlAgentError):
    pass


@dataclass(frozen=True)
class AgentLimits:
    reasoner_attempts: int = 5  # per round; the budget resets every round
    critic_rounds: int = 3

    def __post_init__(self):
        if self.reasoner_attempts < 1 or self.critic_rounds < 1:
            raise ValueError("limits must be >= 1")


@dataclass(frozen=True)
class SqlCandidate:
    sql: str
    attempt_index: int
    round_index: int
    rationale: str
    source_block: str


@dataclass(frozen=True)
class CritiqueVerdict:
    decision: str  # 'approved' | 'revise'
    issues: tuple[tuple[str, str], ...] = ()  # (category, detail)

    def __post_init__(self):
        if self.decision not in ("approved", "revise"):
            raise ValueError(f"unknown decision {self.decision!r}")
        if self.decision == "approved" and self.issues:
            raise ValueError("approved verdicts carry no issues")
        if self.decision == "revise" and not self.issues:
            raise ValueError("revise verdicts need at least one issue")


GENERIC_ISSUE = ("semantic", "the critique could not be parsed; please revise the query")


@dataclass
class SqlAgentResult:
    status: str  # 'answered' | 'exhausted_reasoner' | 'exhausted_critic' | 'policy_violation'
    final_query: ValidatedSelect | None
    outcome: ExecutionOutcome | None
    transcript: list[ChatMessage]
    rounds_used: int
    attempts_used_per_round: list[int]


@dataclass
class _Attempt:
    candidate: SqlCandidate
    validated: ValidatedSelect
    outcome: ExecutionOutcome
    attempts_used: int


def _verdict_text(verdict: CritiqueVerdict) -> str:
    lines = ["The reviewer requires revisions:"]
    lines += [f"- [{category}] {detail}" for category, detail in verdict.issues]
    lines.append("Revise the SQL accordingly. Reply with exactly one ```sql fence.")
    return "\n".join(lines)


class SqlAgent:
    def __init__(self, gateway, executor, prompts, limits: AgentLimits | None = None):
        self.gateway = gateway
        self.executor = executor
        self.prompts = prompts
        self.limits = limits or AgentLimits()

    def seed_transcript(self, intent: str, schema) -> list[ChatMessage]:
        system = self.prompts.render("reasoner", intent=intent, schema=schema.rendered)
        return [
            ChatMessage(Author.SYSTEM, system),
            ChatMessage(Author.USER, "Write the SQL query now."),
        ]

    def reason_step(
        self,
        intent: str,
        schema,
        transcript: list[ChatMessage],
        feedback: CritiqueVerdict | None = None,
        attempt_index: int = 1,
        round_index: int = 1,
    ) -> SqlCandidate:
        """One reasoner call plus SQL extraction; both land in the transcript."""
        if not transcript:
            transcript.extend(self.seed_transcript(intent, schema))
        if feedback is not None:
            transcript.append(ChatMessage(Author.USER, _verdict_text(feedback)))
        completion = self.gateway.complete(Role.REASONER, transcript)
        transcript.append(ChatMessage(Author.ASSISTANT, completion.text))
        try:
            blocks = parse_fences(completion.text)
            block = select_block(
                blocks, SQL_TARGET,
                transcript_tail=completion.text,
                gateway=self.gateway,
                template=self.prompts.load("extractor"),
            )
            sql = parse_into(SQL_TARGET, block)
        except NoBlocks as exc:
            raise NoSqlBlockFound(str(exc)) from exc
        if not sql:
            raise NoSqlBlockFound("the selected code block was empty")
        transcript.append(
            ChatMessage(Author.USER, f"Candidate SQL extracted for execution:\n```sql\n{sql}\n```")
        )
        return SqlCandidate(
            sql=sql,
            attempt_index=attempt_index,
            round_index=round_index,
            rationale=completion.text,
            source_block=block.content,
        )

    def _attempt_loop(
        self,
        intent: str,
        schema,
        transcript: list[ChatMessage],
        feedback: CritiqueVerdict | None,
        round_index: int,
        emit,
    ) -> _Attempt:
        """Self-debug loop: up to N reasoner attempts, execution errors fed
        back verbatim. Raises ExhaustedReasoner or PolicyViolation."""
        limit = self.limits.reasoner_attempts
        last_error: str | None = None
        for attempt in range(1, limit + 1):
            try:
                candidate = self.reason_step(
                    intent, schema, transcript,
                    feedback=feedback if attempt == 1 else None,
                    attempt_index=attempt, round_index=round_index,
                )
            except NoSqlBlockFound as exc:
                last_error = str(exc)
                transcript.append(ChatMessage(
                    Author.USER,
                    "Your reply contained no usable SQL code block. Reply with "
                    "exactly one ```sql fence holding a single SELECT statement.",
                ))
                continue
            emit("sql_attempt", {
                "round": round_index, "attempt": attempt, "sql": candidate.sql,
            })
            try:
                validated = validate_select(candidate.sql)
            except NotSelect as exc:
                transcript.append(ChatMessage(
                    Author.USER,
                    f"Rejected: {exc}. This assistant only ever reads data.",
                ))
                raise PolicyViolation(candidate.sql, str(exc), attempt) from exc
            except (MultipleStatements, ParseError) as exc:
                last_error = str(exc)
                emit("execution_result", {
                    "round": round_index, "attempt": attempt, "status": "failure",
                    "failure_class": "syntax" if isinstance(exc, ParseError) else "other",
                    "message": str(exc),
                })
                transcript.append(ChatMessage(
                    Author.USER,
                    f"The SQL failed validation.\nError: {exc}\n"
                    "Provide a single SELECT statement in one ```sql fence.",
                ))
                continue
            outcome = self.executor.execute(validated)
            emit("execution_result", {
                "round": round_index, "attempt": attempt, "status": outcome.status,
                "failure_class": outcome.failure_class, "message": outcome.message,
                "columns": list(outcome.columns),
                "row_count": len(outcome.preview_rows), "truncated": outcome.truncated,
                # cells rendered so the payload stays JSON-safe (bytes, floats)
                "preview_rows": [
                    [render_cell(v) for v in row] for row in outcome.preview_rows
                ],
            })
            if outcome.status == "success":
                return _Attempt(candidate, validated, outcome, attempt)
            last_error = outcome.message
            transcript.append(ChatMessage(
                Author.USER,
                f"Executing the SQL failed.\nError: {outcome.message}\n"
                "Revise the query. Reply with exactly one ```sql fence.",
            ))
        raise ExhaustedReasoner(limit, last_error)

    def self_debug(
        self,
        intent: str,
        schema,
        transcript: list[ChatMessage],
        feedback: CritiqueVerdict | None = None,
        round_index: int = 1,
    ) -> tuple[SqlCandidate, ExecutionOutcome]:
        attempt = self._attempt_loop(
            intent, schema, transcript, feedback, round_index, emit=lambda *_: None
        )
        return attempt.candidate, attempt.outcome

    def critique(
        self,
        intent: str,
        candidate: SqlCandidate,
        outcome: ExecutionOutcome,
        transcript: list[ChatMessage],
    ) -> CritiqueVerdict:
        """One critic call on a successful execution. Anything that prevents
        a clean verdict degrades to revise-with-a-generic-issue; approval is
        never assumed."""
        request = self.prompts.render(
            "critic",
            intent=intent,
            sql=candidate.sql,
            columns=", ".join(outcome.columns) or "(none)",
            preview=render_preview(outcome),
        )
        transcript.append(ChatMessage(Author.USER, request))
        try:
            completion = self.gateway.complete(Role.CRITIC, transcript)
        except GatewayError as exc:
            log.warning("critic call failed (%s); treating as revise", exc)
            transcript.append(ChatMessage(
                Author.USER, f"(The critique step failed: {exc})"
            ))
            return CritiqueVerdict("revise", (GENERIC_ISSUE,))
        transcript.append(ChatMessage(Author.ASSISTANT, completion.text))
        try:
            return self._parse_verdict(completion.text)
        except UnparsableVerdict as exc:
            log.warning("unparsable critic verdict (%s); treating as revise", exc)
            return CritiqueVerdict("revise", (GENERIC_ISSUE,))

    def _parse_verdict(self, text: str) -> CritiqueVerdict:
        try:
            blocks = parse_fences(text)
            block = select_block(
                blocks, VERDICT_TARGET,
                transcript_tail=text,
                gateway=self.gateway,
                template=self.prompts.load("extractor"),
            )
            data = parse_into(VERDICT_TARGET, block)
        except (NoBlocks, ShapeViolation, GatewayError) as exc:
            raise UnparsableVerdict(str(exc)) from exc
        issues: list[tuple[str, str]] = []
        for raw in data.get("issues") or []:
            if not isinstance(raw, dict):
                raise UnparsableVerdict(f"issue entries must be mappings, got {raw!r}")
            category = str(raw.get("category", "")).strip().lower()
            detail = str(raw.get("detail", "")).strip()
            if category not in CRITIQUE_CATEGORIES:
                raise UnparsableVerdict(f"unknown issue category {category!r}")
            if not detail:
                raise UnparsableVerdict("issue entry lacks a detail line")
            issues.append((category, detail))
        if data["decision"] == "approved":
            if issues:
                log.warning("approved verdict listed issues; dropping them")
            return CritiqueVerdict("approved")
        if not issues:
            issues.append(GENERIC_ISSUE)
        return CritiqueVerdict("revise", tuple(issues))

    def run(self, intent: str, schema, on_event=None) -> SqlAgentResult:
        """Full agent run. Reasoner calls never exceed N*M, critic calls
        never exceed M; the result status says how the run ended."""
        emit = on_event or (lambda *_: None)
        transcript: list[ChatMessage] = []
        attempts_per_round: list[int] = []
        feedback: CritiqueVerdict | None = None
        last: _Attempt | None = None
        rounds = self.limits.critic_rounds
        for round_index in range(1, rounds + 1):
            try:
                attempt = self._attempt_loop(
                    intent, schema, transcript, feedback, round_index, emit
                )
            except ExhaustedReasoner as exc:
                attempts_per_round.append(exc.attempts)
                return SqlAgentResult(
                    status="exhausted_reasoner", final_query=None, outcome=None,
                    transcript=transcript, rounds_used=round_index,
                    attempts_used_per_round=attempts_per_round,
                )
            except PolicyViolation as exc:
                attempts_per_round.append(exc.attempt_index)
                return SqlAgentResult(
                    status="policy_violation", final_query=None, outcome=None,
                    transcript=transcript, rounds_used=round_index,
                    attempts_used_per_round=attempts_per_round,
                )
            attempts_per_round.append(attempt.attempts_used)
            last = attempt
            verdict = self.critique(intent, attempt.candidate, attempt.outcome, transcript)
            emit("critique", {
                "round": round_index, "decision": verdict.decision,
                "issues": [{"category": c, "detail": d} for c, d in verdict.issues],
            })
            if verdict.decision == "approved":
                emit("final_sql", {
                    "sql": attempt.validated.sql, "approved": True,
                    "rounds_used": round_index,
                })
                return SqlAgentResult(
                    status="answered", final_query=attempt.validated,
                    outcome=attempt.outcome, transcript=transcript,
                    rounds_used=round_index, attempts_used_per_round=attempts_per_round,
                )
            feedback = verdict
        assert last is not None
        emit("final_sql", {
            "sql": last.validated.sql, "approved": False, "rounds_used": rounds,
        })
        return SqlAgentResult(
            status="exhausted_critic", final_query=last.validated,
            outcome=last.outcome, transcript=transcript,
            rounds_used=rounds, attempts_used_per_round=attempts_per_round,
        )
