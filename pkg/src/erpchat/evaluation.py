"""Evaluation harness: question suites, answer validators, and a
model-comparison report."""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import yaml

from .gateway import GatewayError
from .orchestrator import ConversationState, Orchestrator
from .sandbox import SandboxError, validate_select

VALIDATOR_KINDS = ("expected_rows", "expected_sql_predicate", "manual")

PASS_MARK = "✓"
FAIL_MARK = "✗"


class EvalError(Exception):
    pass


class MalformedSuite(EvalError):
    pass


@dataclass(frozen=True)
class EvalCase:
    id: str
    question: str
    validator: str
    expected_rows: tuple[tuple, ...] | None = None
    ordered: bool = False
    required_fragments: tuple[str, ...] = ()
    forbidden_fragments: tuple[str, ...] = ()
    manual_verdict: bool | None = None
    reference_sql: str | None = None
    notes: str | None = None

    def __post_init__(self):
        if self.validator not in VALIDATOR_KINDS:
            raise MalformedSuite(f"case '{self.id}': unknown validator {self.validator!r}")
        if self.validator == "expected_rows" and self.expected_rows is None:
            raise MalformedSuite(f"case '{self.id}': expected_rows missing")
        if self.validator == "expected_sql_predicate" and not (
            self.required_fragments or self.forbidden_fragments
        ):
            raise MalformedSuite(f"case '{self.id}': predicate case has no fragments")
        if self.validator == "manual" and self.manual_verdict is None:
            raise MalformedSuite(f"case '{self.id}': manual case lacks a recorded verdict")


@dataclass(frozen=True)
class EvalSuite:
    cases: tuple[EvalCase, ...]


@dataclass(frozen=True)
class CaseResult:
    case_id: str
    passed: bool
    detail: str
    sql: str | None = None
    turn_status: str | None = None


@dataclass(frozen=True)
class ModelReport:
    model_name: str
    results: tuple[CaseResult, ...]

    @property
    def passed(self) -> int:
        return sum(1 for r in self.results if r.passed)

    @property
    def accuracy(self) -> float:
        return self.passed / len(self.results) if self.results else 0.0


@dataclass(frozen=True)
class EvalReport:
    suite: EvalSuite
    models: tuple[ModelReport, ...]


def load_suite(path: str | Path) -> EvalSuite:
    """Reads a YAML suite; empty suites and duplicate case ids are malformed."""
    try:
        raw = yaml.safe_load(Path(path).read_text("utf-8"))
    except OSError as exc:
        raise MalformedSuite(f"cannot read suite {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise MalformedSuite(f"suite {path} is not valid YAML: {exc}") from exc
    if not isinstance(raw, dict) or not isinstance(raw.get("cases"), list):
        raise MalformedSuite(f"suite {path} must hold a 'cases' list")
    cases: list[EvalCase] = []
    seen: set[str] = set()
    for entry in raw["cases"]:
        if not isinstance(entry, dict) or "id" not in entry or "question" not in entry:
            raise MalformedSuite(f"malformed case entry: {entry!r}")
        case_id = str(entry["id"])
        if case_id in seen:
            raise MalformedSuite(f"duplicate case id '{case_id}'")
        seen.add(case_id)
        expected = entry.get("expected_rows")
        cases.append(
            EvalCase(
                id=case_id,
                question=str(entry["question"]),
                validator=str(entry.get("validator", "expected_rows")),
                expected_rows=tuple(tuple(row) for row in expected)
                if expected is not None
                else None,
                ordered=bool(entry.get("ordered", False)),
                required_fragments=tuple(entry.get("required_fragments") or ()),
                forbidden_fragments=tuple(entry.get("forbidden_fragments") or ()),
                manual_verdict=entry.get("manual_verdict"),
                reference_sql=entry.get("reference_sql"),
                notes=entry.get("notes"),
            )
        )
    if not cases:
        raise MalformedSuite(f"suite {path} holds no cases")
    return EvalSuite(cases=tuple(cases))


def bundled_suite() -> EvalSuite:
    """The question suite shipped with the package."""
    packaged = resources.files("erpchat") / "data" / "suite.yaml"
    with resources.as_file(packaged) as concrete:
        return load_suite(concrete)


def _cell_key(value):
    """Comparison key making row equality alias-free and format-tolerant:
    numbers compare numerically, text is trimmed and case-folded."""
    if value is None:
        return ("null",)
    if isinstance(value, bool):
        return ("num", float(int(value)))
    if isinstance(value, (int, float)):
        return ("num", round(float(value), 6))
    if isinstance(value, bytes):
        return ("bytes", value)
    return ("str", str(value).strip().casefold())


def _row_keys(rows) -> list[tuple]:
    return [tuple(_cell_key(cell) for cell in row) for row in rows]


def rows_match(actual, expected, ordered: bool) -> bool:
    got, want = _row_keys(actual), _row_keys(expected)
    if ordered:
        return got == want
    return sorted(got) == sorted(want)


def _normalize_sql(sql: str) -> str:
    return re.sub(r"\s+", " ", sql).strip().casefold()


def sql_predicate_holds(sql: str, case: EvalCase) -> tuple[bool, str]:
    normalized = _normalize_sql(sql)
    for fragment in case.required_fragments:
        if _normalize_sql(fragment) not in normalized:
            return False, f"missing required fragment {fragment!r}"
    for fragment in case.forbidden_fragments:
        if _normalize_sql(fragment) in normalized:
            return False, f"contains forbidden fragment {fragment!r}"
    return True, "all SQL predicates hold"


def run_case(orchestrator: Orchestrator, case: EvalCase) -> CaseResult:
    """Runs one case in a fresh conversation; any failure to produce a
    validated answer is a failed case, never a crash."""
    state = ConversationState(session_id=f"eval-{case.id}")
    try:
        reply, status, events = orchestrator.handle_turn(state, case.question)
    except GatewayError as exc:
        return CaseResult(case.id, False, f"gateway failure: {exc}")
    final_sql = None
    for event in events:
        if event.kind == "final_sql":
            final_sql = event.payload.get("sql")
    if status != "answered" or final_sql is None:
        return CaseResult(case.id, False, f"turn ended with status '{status}'",
                          turn_status=status)

    if case.validator == "manual":
        verdict = bool(case.manual_verdict)
        detail = "recorded expert verdict"
        if case.notes:
            detail += f": {case.notes}"
        return CaseResult(case.id, verdict, detail, sql=final_sql, turn_status=status)

    if case.validator == "expected_sql_predicate":
        ok, detail = sql_predicate_holds(final_sql, case)
        return CaseResult(case.id, ok, detail, sql=final_sql, turn_status=status)

    # expected_rows: re-run the final query for the complete result set.
    try:
        validated = validate_select(final_sql)
    except SandboxError as exc:
        return CaseResult(case.id, False, f"final SQL failed validation: {exc}",
                          sql=final_sql, turn_status=status)
    fetch = max(len(case.expected_rows) + 5, 50)
    outcome = orchestrator.sql_agent.executor.execute(validated, preview_limit=fetch)
    if outcome.status != "success":
        return CaseResult(case.id, False, f"final SQL failed to execute: {outcome.message}",
                          sql=final_sql, turn_status=status)
    if outcome.truncated:
        return CaseResult(case.id, False,
                          f"result has more than {fetch} rows; expected {len(case.expected_rows)}",
                          sql=final_sql, turn_status=status)
    if rows_match(outcome.preview_rows, case.expected_rows, case.ordered):
        return CaseResult(case.id, True, "rows match", sql=final_sql, turn_status=status)
    return CaseResult(
        case.id, False,
        f"rows differ: got {len(outcome.preview_rows)} rows, expected {len(case.expected_rows)}",
        sql=final_sql, turn_status=status,
    )


def run_suite(orchestrator: Orchestrator, suite: EvalSuite, model_name: str) -> ModelReport:
    results = tuple(run_case(orchestrator, case) for case in suite.cases)
    return ModelReport(model_name=model_name, results=results)


def render_report(report: EvalReport) -> str:
    """Deterministic markdown: one row per model, one mark column per case,
    then an accuracy column, then failure details."""
    case_ids = [case.id for case in report.suite.cases]
    lines = ["# Evaluation Report", ""]
    lines.append(f"Suite of {len(case_ids)} cases; one conversation per case.")
    lines.append("")
    header = "| Model | " + " | ".join(case_ids) + " | Accuracy |"
    rule = "|---" * (len(case_ids) + 2) + "|"
    lines += [header, rule]
    for model in report.models:
        marks = " | ".join(PASS_MARK if r.passed else FAIL_MARK for r in model.results)
        lines.append(
            f"| {model.model_name} | {marks} | {model.passed}/{len(model.results)} |"
        )
    failures = [
        (model.model_name, result)
        for model in report.models
        for result in model.results
        if not result.passed
    ]
    if failures:
        lines += ["", "## Failures", ""]
        for model_name, result in failures:
            lines.append(f"- {model_name} / {result.case_id}: {result.detail}")
    return "\n".join(lines) + "\n"
