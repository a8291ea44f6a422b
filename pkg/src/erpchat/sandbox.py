"""Validation and read-only execution of model-produced SQL.

Defense in depth: a lexical classifier proves the statement is a single
SELECT before anything touches an engine, and execution happens on a
read-only connection with a deny-by-default authorizer and a statement
deadline. Execution failures are data, not exceptions; the self-debug
loop feeds them back to the model.
"""

from __future__ import annotations

import sqlite3
import time
from dataclasses import dataclass

DEFAULT_PREVIEW_LIMIT = 10
DEFAULT_STATEMENT_TIMEOUT_S = 30.0
CELL_RENDER_CAP = 120

FAILURE_CLASSES = ("syntax", "unknown_identifier", "type_mismatch", "timeout", "other")


class SandboxError(Exception):
    pass


class NotSelect(SandboxError):
    """The statement is a write, DDL, or other non-SELECT kind."""

    def __init__(self, kind: str):
        super().__init__(f"only SELECT statements are allowed; got {kind}")
        self.kind = kind


class MultipleStatements(SandboxError):
    def __init__(self, count: int):
        super().__init__(f"expected exactly one statement, found {count}")
        self.count = count


class ParseError(SandboxError):
    def __init__(self, position: int, detail: str):
        super().__init__(f"parse error at offset {position}: {detail}")
        self.position = position
        self.detail = detail


@dataclass(frozen=True)
class Token:
    kind: str  # 'word' | 'qident' | 'string' | 'number' | 'op'
    text: str
    pos: int

    @property
    def upper(self) -> str:
        return self.text.upper()


_WORD_START = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_")
_WORD_BODY = _WORD_START | set("0123456789$")
_IDENT_QUOTES = {'"': '"', "`": "`", "[": "]"}


def tokenize(sql: str) -> list[Token]:
    """Lexes SQL text; comments and whitespace are dropped. Raises
    ParseError for unterminated strings, comments or quoted identifiers."""
    tokens: list[Token] = []
    i, n = 0, len(sql)
    while i < n:
        ch = sql[i]
        if ch.isspace():
            i += 1
            continue
        if ch == "-" and sql.startswith("--", i):
            end = sql.find("\n", i)
            i = n if end < 0 else end + 1
            continue
        if ch == "/" and sql.startswith("/*", i):
            end = sql.find("*/", i + 2)
            if end < 0:
                raise ParseError(i, "unterminated block comment")
            i = end + 2
            continue
        if ch == "'":
            start = i
            i += 1
            while i < n:
                if sql[i] == "'":
                    if i + 1 < n and sql[i + 1] == "'":
                        i += 2
                        continue
                    break
                i += 1
            if i >= n:
                raise ParseError(start, "unterminated string literal")
            i += 1
            tokens.append(Token("string", sql[start:i], start))
            continue
        if ch in _IDENT_QUOTES:
            closer = _IDENT_QUOTES[ch]
            start = i
            i += 1
            while i < n:
                if sql[i] == closer:
                    if closer != "]" and i + 1 < n and sql[i + 1] == closer:
                        i += 2
                        continue
                    break
                i += 1
            if i >= n:
                raise ParseError(start, "unterminated quoted identifier")
            i += 1
            tokens.append(Token("qident", sql[start:i], start))
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and sql[i + 1].isdigit()):
            start = i
            i += 1
            while i < n:
                c = sql[i]
                if c.isalnum() or c == ".":
                    i += 1
                elif c in "+-" and sql[i - 1] in "eE" and sql[start].isdigit():
                    i += 1
                else:
                    break
            tokens.append(Token("number", sql[start:i], start))
            continue
        if ch in _WORD_START:
            start = i
            i += 1
            while i < n and sql[i] in _WORD_BODY:
                i += 1
            tokens.append(Token("word", sql[start:i], start))
            continue
        tokens.append(Token("op", ch, i))
        i += 1
    return tokens


def unquote_ident(text: str) -> str:
    if text and text[0] in _IDENT_QUOTES:
        closer = _IDENT_QUOTES[text[0]]
        inner = text[1:-1]
        return inner if closer == "]" else inner.replace(closer * 2, closer)
    return text


def _split_statements(tokens: list[Token]) -> list[list[Token]]:
    groups: list[list[Token]] = [[]]
    for token in tokens:
        if token.kind == "op" and token.text == ";":
            groups.append([])
        else:
            groups[-1].append(token)
    return [g for g in groups if g]


def _skip_balanced(tokens: list[Token], i: int) -> int:
    """``tokens[i]`` is '('; returns the index just past its match."""
    depth = 0
    while i < len(tokens):
        text = tokens[i].text
        if text == "(":
            depth += 1
        elif text == ")":
            depth -= 1
            if depth == 0:
                return i + 1
        i += 1
    raise ParseError(tokens[-1].pos, "unbalanced parentheses")


_CTE_BODY_STARTERS = {"SELECT", "WITH", "VALUES"}


def _classify_kind(tokens: list[Token]) -> None:
    """Proves the statement kind is SELECT; raises NotSelect otherwise."""
    head = tokens[0]
    if head.kind != "word":
        raise NotSelect(f"a statement starting with {head.text!r}")
    kind = head.upper
    if kind == "SELECT":
        return
    if kind != "WITH":
        raise NotSelect(f"a {kind} statement")

    i = 1
    if i < len(tokens) and tokens[i].upper == "RECURSIVE":
        i += 1
    while True:
        if i >= len(tokens) or tokens[i].kind not in ("word", "qident"):
            raise ParseError(tokens[min(i, len(tokens) - 1)].pos, "malformed WITH clause")
        i += 1  # CTE name
        if i < len(tokens) and tokens[i].text == "(":
            i = _skip_balanced(tokens, i)  # optional column list
        if i >= len(tokens) or tokens[i].upper != "AS":
            raise ParseError(tokens[min(i, len(tokens) - 1)].pos, "expected AS in WITH clause")
        i += 1
        if i < len(tokens) and tokens[i].upper == "NOT":
            i += 1
        if i < len(tokens) and tokens[i].upper == "MATERIALIZED":
            i += 1
        if i >= len(tokens) or tokens[i].text != "(":
            raise ParseError(tokens[min(i, len(tokens) - 1)].pos, "expected ( after AS")
        body_first = tokens[i + 1] if i + 1 < len(tokens) else None
        if body_first is None or body_first.upper not in _CTE_BODY_STARTERS:
            found = body_first.text if body_first else "nothing"
            raise NotSelect(f"a WITH clause whose body starts with {found!r}")
        i = _skip_balanced(tokens, i)
        if i < len(tokens) and tokens[i].text == ",":
            i += 1
            continue
        break
    if i >= len(tokens) or tokens[i].upper != "SELECT":
        found = tokens[i].upper if i < len(tokens) else "nothing"
        raise NotSelect(f"a WITH statement followed by {found}")


# Keywords ending the table-reference zone that a FROM opens.
_FROM_ZONE_ENDERS = {
    "WHERE", "GROUP", "HAVING", "ORDER", "LIMIT", "WINDOW",
    "UNION", "INTERSECT", "EXCEPT", "ON", "USING", "SELECT",
}
_JOIN_WORDS = {"JOIN", "INNER", "LEFT", "RIGHT", "FULL", "OUTER", "CROSS", "NATURAL"}
_SELECT_LIST_MODIFIERS = {"DISTINCT", "ALL"}
_NONALIAS_WORDS = _FROM_ZONE_ENDERS | _JOIN_WORDS | {
    "AS", "FROM", "BY", "NOT", "AND", "OR", "CASE", "WHEN", "THEN", "ELSE",
    "END", "IN", "IS", "NULL", "LIKE", "BETWEEN", "ASC", "DESC", "COLLATE",
}
# Keywords that can legally end an expression, unlike connectives.
_EXPR_TERMINAL_WORDS = {"END", "NULL", "TRUE", "FALSE",
                        "CURRENT_TIMESTAMP", "CURRENT_DATE", "CURRENT_TIME"}


def _dotted_name(tokens: list[Token], i: int) -> tuple[str, int]:
    parts = [unquote_ident(tokens[i].text)]
    i += 1
    while i + 1 < len(tokens) and tokens[i].text == "." and tokens[i + 1].kind in ("word", "qident"):
        parts.append(unquote_ident(tokens[i + 1].text))
        i += 2
    return parts[-1], i


def _referenced_tables(tokens: list[Token]) -> frozenset[str]:
    """Names appearing in table position (after FROM/JOIN and in FROM-zone
    comma lists). CTE names surface here too; this is a summary, not a
    resolver."""
    names: set[str] = set()
    depth = 0
    from_zone_depth: int | None = None
    i = 0
    while i < len(tokens):
        token = tokens[i]
        if token.text == "(":
            depth += 1
        elif token.text == ")":
            depth -= 1
            if from_zone_depth is not None and depth < from_zone_depth:
                from_zone_depth = None
        elif token.kind == "word":
            upper = token.upper
            if upper in ("FROM", "JOIN"):
                if upper == "FROM":
                    from_zone_depth = depth
                if i + 1 < len(tokens) and tokens[i + 1].kind in ("word", "qident"):
                    name, next_i = _dotted_name(tokens, i + 1)
                    names.add(name)
                    i = next_i
                    continue
            elif upper in _FROM_ZONE_ENDERS and from_zone_depth == depth:
                from_zone_depth = None
        elif (
            token.text == ","
            and from_zone_depth == depth
            and i + 1 < len(tokens)
            and tokens[i + 1].kind in ("word", "qident")
        ):
            name, next_i = _dotted_name(tokens, i + 1)
            names.add(name)
            i = next_i
            continue
        i += 1
    return frozenset(names)


def _join_item(tokens: list[Token]) -> str:
    out: list[str] = []
    for token in tokens:
        text = token.text
        if out and (text in (")", ",", ".") or out[-1].endswith(("(", "."))):
            out[-1] += text
        elif out and text == "(":
            out[-1] += text
        else:
            out.append(text)
    return " ".join(out)


def _output_columns(tokens: list[Token]) -> tuple[str, ...]:
    """Labels of the top-level select list: the alias when one is given,
    otherwise the expression text."""
    i = 0
    depth = 0
    while i < len(tokens):
        if tokens[i].text == "(":
            depth += 1
        elif tokens[i].text == ")":
            depth -= 1
        elif depth == 0 and tokens[i].upper == "SELECT":
            i += 1
            break
        i += 1
    if i < len(tokens) and tokens[i].upper in _SELECT_LIST_MODIFIERS:
        i += 1

    items: list[list[Token]] = [[]]
    depth = 0
    while i < len(tokens):
        token = tokens[i]
        if token.text == "(":
            depth += 1
        elif token.text == ")":
            depth -= 1
        elif depth == 0 and token.kind == "word" and token.upper == "FROM":
            break
        elif depth == 0 and token.text == ",":
            items.append([])
            i += 1
            continue
        items[-1].append(token)
        i += 1

    labels: list[str] = []
    for item in items:
        if not item:
            continue
        if len(item) == 1 and item[0].kind == "qident":
            labels.append(unquote_ident(item[0].text))
        elif len(item) >= 2 and item[-2].kind == "word" and item[-2].upper == "AS":
            labels.append(unquote_ident(item[-1].text))
        elif _has_implicit_alias(item):
            labels.append(unquote_ident(item[-1].text))
        else:
            labels.append(_join_item(item))
    return tuple(labels)


def _has_implicit_alias(item: list[Token]) -> bool:
    """Heuristic: a trailing bare identifier right after a finished
    expression reads as an alias (``COUNT(*) cnt``, ``price total``)."""
    if len(item) < 2:
        return False
    last, prev = item[-1], item[-2]
    if last.kind not in ("word", "qident"):
        return False
    if last.kind == "word" and last.upper in _NONALIAS_WORDS:
        return False
    if prev.text in (")", "."):
        return prev.text == ")"
    if prev.kind in ("qident", "number", "string"):
        return True
    if prev.kind == "word":
        return prev.upper not in _NONALIAS_WORDS or prev.upper in _EXPR_TERMINAL_WORDS
    return False


@dataclass(frozen=True)
class ValidatedSelect:
    sql: str
    referenced_tables: frozenset[str]
    output_columns: tuple[str, ...]


def _grammar_check(sql: str) -> None:
    """Dialect grammar check without execution: preparing EXPLAIN against
    an empty in-memory database surfaces syntax errors and nothing else
    we care about (missing tables are a semantic matter for the real run)."""
    conn = sqlite3.connect(":memory:")
    try:
        conn.execute("EXPLAIN " + sql)
    except sqlite3.Error as exc:
        message = str(exc)
        lowered = message.lower()
        if "syntax error" in lowered or "unrecognized token" in lowered or "incomplete input" in lowered:
            raise ParseError(0, message) from exc
    finally:
        conn.close()


def validate_select(sql: str) -> ValidatedSelect:
    """Proves ``sql`` is one read-only SELECT and summarizes it.

    Raises NotSelect, MultipleStatements or ParseError; never executes the
    statement.
    """
    tokens = tokenize(sql)
    statements = _split_statements(tokens)
    if not statements:
        raise ParseError(0, "no statement found")
    if len(statements) > 1:
        raise MultipleStatements(len(statements))
    statement = statements[0]
    _classify_kind(statement)
    for token in statement:
        if token.kind == "word" and token.upper == "INTO":
            raise NotSelect("a SELECT INTO statement")
    _grammar_check(sql)
    return ValidatedSelect(
        sql=sql,
        referenced_tables=_referenced_tables(statement),
        output_columns=_output_columns(statement),
    )


@dataclass(frozen=True)
class ExecutionOutcome:
    status: str  # 'success' | 'failure'
    columns: tuple[str, ...] = ()
    preview_rows: tuple[tuple, ...] = ()
    truncated: bool = False
    failure_class: str | None = None
    message: str | None = None

    def __post_init__(self):
        if self.status == "success":
            if self.failure_class is not None or self.message is not None:
                raise ValueError("success outcomes carry no failure fields")
        elif self.status == "failure":
            if self.failure_class not in FAILURE_CLASSES:
                raise ValueError(f"failure_class must be one of {FAILURE_CLASSES}")
            if not self.message:
                raise ValueError("failure outcomes need a message")
        else:
            raise ValueError(f"unknown status {self.status!r}")


_FAILURE_PATTERNS = (
    ("timeout", ("interrupted",)),
    ("unknown_identifier", ("no such table", "no such column", "no such function",
                            "no such collation", "no such index", "no such module",
                            "ambiguous column name")),
    ("syntax", ("syntax error", "unrecognized token", "incomplete input")),
    ("type_mismatch", ("datatype mismatch", "cannot be cast", "integer overflow")),
)


def classify_failure(message: str) -> str:
    lowered = message.lower()
    for klass, needles in _FAILURE_PATTERNS:
        if any(needle in lowered for needle in needles):
            return klass
    return "other"


# SQLite authorizer action codes allowed for read-only query work.
_ALLOWED_ACTIONS = {
    sqlite3.SQLITE_READ,
    sqlite3.SQLITE_SELECT,
    sqlite3.SQLITE_FUNCTION,
    sqlite3.SQLITE_RECURSIVE,
}


def _readonly_authorizer(action, arg1, arg2, dbname, source):
    return sqlite3.SQLITE_OK if action in _ALLOWED_ACTIONS else sqlite3.SQLITE_DENY


class ReadOnlyExecutor:
    """Runs validated SELECTs against one database file.

    Every call opens a fresh read-only connection (URI mode=ro plus
    query_only plus the allow-list authorizer) so no state leaks between
    turns and the engine itself refuses writes even if validation were
    wrong.
    """

    def __init__(self, database_path: str, *,
                 preview_limit: int = DEFAULT_PREVIEW_LIMIT,
                 statement_timeout_s: float = DEFAULT_STATEMENT_TIMEOUT_S):
        self.database_path = database_path
        self.preview_limit = preview_limit
        self.statement_timeout_s = statement_timeout_s

    def _connect(self) -> sqlite3.Connection:
        uri = f"file:{self.database_path}?mode=ro"
        conn = sqlite3.connect(uri, uri=True)
        conn.execute("PRAGMA query_only = ON")
        conn.set_authorizer(_readonly_authorizer)
        return conn

    def execute(
        self,
        query: ValidatedSelect,
        preview_limit: int | None = None,
        timeout_s: float | None = None,
    ) -> ExecutionOutcome:
        """Executes and previews a validated query; failures come back as
        outcomes with a stable failure class."""
        if not isinstance(query, ValidatedSelect):
            raise TypeError("execute requires a ValidatedSelect")
        limit = self.preview_limit if preview_limit is None else preview_limit
        deadline_s = self.statement_timeout_s if timeout_s is None else timeout_s
        try:
            conn = self._connect()
        except sqlite3.Error as exc:
            return ExecutionOutcome(
                status="failure", failure_class="other",
                message=f"cannot open database: {exc}",
            )
        deadline = time.monotonic() + deadline_s
        # The handler fires every ~1000 VM ops; returning nonzero interrupts.
        conn.set_progress_handler(lambda: 1 if time.monotonic() > deadline else 0, 1000)
        try:
            cursor = conn.execute(query.sql)
            names = tuple(d[0] for d in cursor.description or ())
            rows = cursor.fetchmany(limit + 1)
            truncated = len(rows) > limit
            preview = tuple(tuple(r) for r in rows[:limit])
            return ExecutionOutcome(
                status="success", columns=names,
                preview_rows=preview, truncated=truncated,
            )
        except sqlite3.Error as exc:
            message = str(exc)
            return ExecutionOutcome(
                status="failure",
                failure_class=classify_failure(message),
                message=message,
            )
        finally:
            conn.close()


def render_cell(value) -> str:
    if value is None:
        return "NULL"
    text = str(value)
    if len(text) > CELL_RENDER_CAP:
        text = text[: CELL_RENDER_CAP - 3] + "..."
    return text


def render_preview(outcome: ExecutionOutcome) -> str:
    """Markdown table of the preview rows; failures render their message."""
    if outcome.status != "success":
        return f"Execution failed ({outcome.failure_class}): {outcome.message}"
    if not outcome.columns:
        return "(no columns)"
    header = "| " + " | ".join(outcome.columns) + " |"
    rule = "| " + " | ".join("---" for _ in outcome.columns) + " |"
    lines = [header, rule]
    for row in outcome.preview_rows:
        lines.append("| " + " | ".join(render_cell(v) for v in row) + " |")
    if not outcome.preview_rows:
        lines.append("| " + " | ".join("" for _ in outcome.columns) + " |")
    table = "\n".join(lines)
    if outcome.truncated:
        table += "\n\n(Preview truncated; more rows exist.)"
    return table
