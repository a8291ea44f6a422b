"""Schema catalog: live introspection plus a curated semantic layer,
rendered into one deterministic markdown document for model prompts."""

from __future__ import annotations

import fnmatch
import re
import sqlite3
from dataclasses import dataclass
from enum import Enum

DEFAULT_SAMPLE_LIMIT = 3

SECTION_INTRODUCTION = "Introduction"
SECTION_CONCEPTS = "Concepts"
SECTION_TABLE_SUMMARIES = "Table Summaries"
SECTION_RELATIONSHIPS = "High-Level Relationships"
REQUIRED_SECTIONS = (
    SECTION_INTRODUCTION,
    SECTION_CONCEPTS,
    SECTION_TABLE_SUMMARIES,
    SECTION_RELATIONSHIPS,
)


class CatalogError(Exception):
    pass


class ConnectionFailed(CatalogError):
    """The database could not be opened or queried."""


class PermissionDenied(CatalogError):
    """Catalog metadata exists but could not be read."""


class MissingSection(CatalogError):
    def __init__(self, section: str, detail: str = "missing"):
        super().__init__(f"semantic description section '{section}' is {detail}")
        self.section = section


class UnknownTable(CatalogError):
    def __init__(self, table: str, where: str):
        super().__init__(f"{where} references unknown table '{table}'")
        self.table = table


class MalformedRelationship(CatalogError):
    def __init__(self, line: str):
        super().__init__(f"cannot parse relationship line: {line!r}")
        self.line = line


class Cardinality(str, Enum):
    ONE_TO_ONE = "one_to_one"
    ONE_TO_MANY = "one_to_many"


@dataclass(frozen=True)
class ColumnInfo:
    name: str
    data_type: str
    description: str | None = None
    sample_values: tuple[str, ...] = ()
    is_primary_key: bool = False
    foreign_key_target: tuple[str, str] | None = None  # (table, column)


@dataclass(frozen=True)
class TableInfo:
    name: str
    columns: tuple[ColumnInfo, ...]
    row_count: int | None = None

    def __post_init__(self):
        if not self.columns:
            raise ValueError(f"table '{self.name}' has no columns")


@dataclass(frozen=True)
class Relationship:
    source_table: str
    target_table: str
    cardinality: Cardinality
    declared: bool
    source_column: str
    target_column: str
    comment: str | None = None


@dataclass(frozen=True)
class SemanticDescription:
    introduction: str
    concepts: str
    table_summaries: dict[str, str]
    high_level_relationships: tuple[Relationship, ...]


@dataclass(frozen=True)
class SchemaDocument:
    semantic: SemanticDescription
    tables: tuple[TableInfo, ...]
    relationships: tuple[Relationship, ...]
    rendered: str

    def table(self, name: str) -> TableInfo:
        for info in self.tables:
            if info.name == name:
                return info
        raise UnknownTable(name, "lookup")


def _quote_ident(name: str) -> str:
    return '"' + name.replace('"', '""') + '"'


def _render_literal(value) -> str:
    if value is None:
        return "NULL"
    if isinstance(value, bytes):
        return "X'" + value.hex() + "'"
    if isinstance(value, (int, float)):
        return str(value)
    return "'" + str(value).replace("'", "''") + "'"


# Matches "Name TYPE ...,  -- description" lines inside CREATE TABLE source.
_DDL_COMMENT_RE = re.compile(r"^\s*(?:\"([^\"]+)\"|(\w+))\s+\S.*?--\s*(.+?)\s*$")
_DDL_NON_COLUMN_WORDS = {"create", "primary", "foreign", "unique", "check", "constraint"}


def _column_descriptions(create_sql: str | None) -> dict[str, str]:
    """Column documentation travels as trailing comments in the DDL."""
    docs: dict[str, str] = {}
    if not create_sql:
        return docs
    for line in create_sql.split("\n"):
        match = _DDL_COMMENT_RE.match(line)
        if match:
            name = match.group(1) or match.group(2)
            if name.lower() in _DDL_NON_COLUMN_WORDS:
                continue
            docs[name] = match.group(3)
    return docs


def _unique_single_columns(conn: sqlite3.Connection, table: str) -> set[str]:
    """Columns covered alone by a unique index (including the primary key)."""
    unique: set[str] = set()
    for row in conn.execute(f"PRAGMA index_list({_quote_ident(table)})"):
        # row: (seq, name, unique, origin, partial)
        if not row[2]:
            continue
        cols = [r[2] for r in conn.execute(f"PRAGMA index_info({_quote_ident(row[1])})")]
        if len(cols) == 1 and cols[0] is not None:
            unique.add(cols[0])
    return unique


def introspect(
    conn: sqlite3.Connection,
    sample_limit: int = DEFAULT_SAMPLE_LIMIT,
    sensitive_patterns: tuple[str, ...] = (),
) -> tuple[list[TableInfo], list[Relationship]]:
    """Reads tables, columns, keys and declared foreign keys from the engine
    catalog. Tables come back in alphabetical order, columns in catalog
    order. Columns matching a sensitive pattern get no sample values."""
    try:
        rows = conn.execute(
            "SELECT name, sql FROM sqlite_master"
            " WHERE type = 'table' AND name NOT LIKE 'sqlite_%' ORDER BY name"
        ).fetchall()
    except sqlite3.Error as exc:
        raise PermissionDenied(f"cannot read database catalog: {exc}") from exc

    tables: list[TableInfo] = []
    relationships: list[Relationship] = []
    try:
        for table_name, create_sql in rows:
            docs = _column_descriptions(create_sql)
            quoted = _quote_ident(table_name)
            fk_targets: dict[str, tuple[str, str]] = {}
            for fk in conn.execute(f"PRAGMA foreign_key_list({quoted})"):
                # fk: (id, seq, target_table, from_col, to_col, ...)
                fk_targets[fk[3]] = (fk[2], fk[4])
            unique_cols = _unique_single_columns(conn, table_name)

            columns: list[ColumnInfo] = []
            for cid, name, data_type, notnull, default, pk in conn.execute(
                f"PRAGMA table_info({quoted})"
            ):
                is_sensitive = any(
                    fnmatch.fnmatch(name.lower(), pat.lower()) for pat in sensitive_patterns
                )
                samples: tuple[str, ...] = ()
                if not is_sensitive and sample_limit > 0:
                    qcol = _quote_ident(name)
                    sampled = conn.execute(
                        f"SELECT DISTINCT {qcol} FROM {quoted}"
                        f" WHERE {qcol} IS NOT NULL ORDER BY {qcol} LIMIT ?",
                        (sample_limit,),
                    ).fetchall()
                    samples = tuple(_render_literal(v[0]) for v in sampled)
                columns.append(
                    ColumnInfo(
                        name=name,
                        data_type=data_type or "",
                        description=docs.get(name),
                        sample_values=samples,
                        is_primary_key=bool(pk),
                        foreign_key_target=fk_targets.get(name),
                    )
                )
                if pk:
                    unique_cols.add(name)

            row_count = conn.execute(f"SELECT count(*) FROM {quoted}").fetchone()[0]
            tables.append(TableInfo(table_name, tuple(columns), row_count))

            # A declared FK reads child -> parent; the document keeps the
            # parent as source so all relationships point the same way.
            for child_col, (parent_table, parent_col) in fk_targets.items():
                cardinality = (
                    Cardinality.ONE_TO_ONE
                    if child_col in unique_cols
                    else Cardinality.ONE_TO_MANY
                )
                relationships.append(
                    Relationship(
                        source_table=parent_table,
                        target_table=table_name,
                        cardinality=cardinality,
                        declared=True,
                        source_column=parent_col,
                        target_column=child_col,
                    )
                )
    except sqlite3.Error as exc:
        raise ConnectionFailed(f"introspection query failed: {exc}") from exc
    return tables, relationships


_H2_RE = re.compile(r"^##\s+(.+?)\s*$")
_H3_RE = re.compile(r"^###\s+(\S+)\s*$")
_REL_RE = re.compile(
    r"^-\s+(\w+)\s*->\s*(\w+)\s*:\s*(one_to_one|one_to_many)\s+via\s+(\w+)\s*->\s*(\w+)"
    r"\s*(?:--\s*(.*\S))?\s*$"
)


def _split_h2(text: str) -> dict[str, str]:
    sections: dict[str, str] = {}
    current: str | None = None
    body: list[str] = []
    for line in text.split("\n"):
        match = _H2_RE.match(line)
        if match:
            if current is not None:
                sections[current] = "\n".join(body).strip()
            current = match.group(1)
            body = []
        elif current is not None:
            body.append(line)
    if current is not None:
        sections[current] = "\n".join(body).strip()
    return sections


def load_semantic(source: str) -> SemanticDescription:
    """Parses the hand-written semantic layer from markdown.

    The four mandated second-level headings must all be present and
    non-empty. Relationship bullets follow the fixed
    ``- SRC -> DST: cardinality via SrcCol -> DstCol -- comment`` form.
    """
    sections = _split_h2(source)
    for name in REQUIRED_SECTIONS:
        if name not in sections:
            raise MissingSection(name)
        if not sections[name]:
            raise MissingSection(name, "empty")

    summaries: dict[str, str] = {}
    current: str | None = None
    body: list[str] = []
    for line in sections[SECTION_TABLE_SUMMARIES].split("\n"):
        match = _H3_RE.match(line)
        if match:
            if current is not None:
                summaries[current] = "\n".join(body).strip()
            current = match.group(1)
            body = []
        elif current is not None:
            body.append(line)
    if current is not None:
        summaries[current] = "\n".join(body).strip()

    relationships: list[Relationship] = []
    for line in sections[SECTION_RELATIONSHIPS].split("\n"):
        stripped = line.strip()
        if not stripped.startswith("- "):
            continue
        match = _REL_RE.match(stripped)
        if not match:
            raise MalformedRelationship(stripped)
        relationships.append(
            Relationship(
                source_table=match.group(1),
                target_table=match.group(2),
                cardinality=Cardinality(match.group(3)),
                declared=False,
                source_column=match.group(4),
                target_column=match.group(5),
                comment=match.group(6),
            )
        )

    return SemanticDescription(
        introduction=sections[SECTION_INTRODUCTION],
        concepts=sections[SECTION_CONCEPTS],
        table_summaries=summaries,
        high_level_relationships=tuple(relationships),
    )


def _render_relationship(rel: Relationship) -> str:
    origin = "declared foreign key" if rel.declared else "documented"
    line = (
        f"- {rel.source_table} -> {rel.target_table} ({rel.cardinality.value}, {origin})"
        f" via {rel.source_table}.{rel.source_column} = {rel.target_table}.{rel.target_column}"
    )
    if rel.comment:
        line += f" -- {rel.comment}"
    return line


def _render_column(col: ColumnInfo) -> str:
    parts = [f"- **{col.name}** ({col.data_type or 'UNTYPED'})"]
    if col.is_primary_key:
        parts.append("**key:** primary")
    if col.foreign_key_target:
        parts.append(f"**references:** {col.foreign_key_target[0]}.{col.foreign_key_target[1]}")
    if col.description:
        parts.append(f"**description:** {col.description}")
    if col.sample_values:
        parts.append(f"**samples:** {', '.join(col.sample_values)}")
    return " | ".join(parts)


def build_document(
    semantic: SemanticDescription,
    tables: list[TableInfo],
    relationships: list[Relationship],
) -> SchemaDocument:
    """Assembles the prompt-facing schema document.

    The semantic layer renders first, then the autogenerated catalog:
    relationship list, then one section per table with one bullet per
    column. Rendering is deterministic for fixed inputs.
    """
    known = {t.name for t in tables}
    for name in semantic.table_summaries:
        if name not in known:
            raise UnknownTable(name, "table summary")
    combined = tuple(relationships) + tuple(semantic.high_level_relationships)
    for rel in combined:
        for endpoint in (rel.source_table, rel.target_table):
            if endpoint not in known:
                raise UnknownTable(endpoint, "relationship")

    ordered_tables = tuple(sorted(tables, key=lambda t: t.name))
    ordered_rels = tuple(
        sorted(combined, key=lambda r: (r.source_table, r.target_table, r.target_column))
    )

    out: list[str] = ["# Database Guide", ""]
    out += [f"## {SECTION_INTRODUCTION}", "", semantic.introduction, ""]
    out += [f"## {SECTION_CONCEPTS}", "", semantic.concepts, ""]
    out += [f"## {SECTION_TABLE_SUMMARIES}", ""]
    for name in sorted(semantic.table_summaries):
        out += [f"### {name}", "", semantic.table_summaries[name], ""]
    out += [f"## {SECTION_RELATIONSHIPS}", ""]
    for rel in ordered_rels:
        out.append(_render_relationship(rel))
    out += ["", "---", "", "# Autogenerated Schema", ""]
    for info in ordered_tables:
        count_note = f", {info.row_count} rows" if info.row_count is not None else ""
        out += [f"## {info.name} ({len(info.columns)} columns{count_note})", ""]
        for col in info.columns:
            out.append(_render_column(col))
        out.append("")
    rendered = "\n".join(out).rstrip() + "\n"

    return SchemaDocument(
        semantic=semantic,
        tables=ordered_tables,
        relationships=ordered_rels,
        rendered=rendered,
    )


_TABLE_HEADING_RE = re.compile(r"^##\s+(\w+)\s+\(\d+ columns(?:, \d+ rows)?\)\s*$")
_COLUMN_BULLET_RE = re.compile(r"^-\s+\*\*([^*]+)\*\*\s+\(")


def parse_rendered_columns(rendered: str) -> set[tuple[str, str]]:
    """Recovers (table, column) pairs from a rendered document; used to
    check the document against the live catalog."""
    pairs: set[tuple[str, str]] = set()
    current: str | None = None
    for line in rendered.split("\n"):
        heading = _TABLE_HEADING_RE.match(line)
        if heading:
            current = heading.group(1)
            continue
        if current is None:
            continue
        bullet = _COLUMN_BULLET_RE.match(line)
        if bullet:
            pairs.add((current, bullet.group(1)))
    return pairs
