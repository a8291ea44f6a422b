"""Bundled demonstration database: seeding, read-only access, checksums."""

from __future__ import annotations

import hashlib
import sqlite3
from importlib import resources
from pathlib import Path

from .catalog import ConnectionFailed

FIXTURE_SQL_RESOURCE = "erp_fixture.sql"
SEMANTIC_RESOURCE = "semantic.md"


def fixture_sql() -> str:
    return (resources.files("erpchat") / "data" / FIXTURE_SQL_RESOURCE).read_text("utf-8")


def semantic_markdown() -> str:
    return (resources.files("erpchat") / "data" / SEMANTIC_RESOURCE).read_text("utf-8")


def seed_fixture(path: str | Path) -> None:
    """Creates the demonstration database at ``path`` from the bundled DDL."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    conn = sqlite3.connect(target)
    try:
        conn.executescript(fixture_sql())
        conn.commit()
    finally:
        conn.close()


def ensure_fixture(path: str | Path) -> Path:
    target = Path(path)
    if not target.exists():
        seed_fixture(target)
    return target


def open_readonly(path: str | Path) -> sqlite3.Connection:
    target = Path(path)
    if not target.is_file():
        raise ConnectionFailed(f"database file not found: {target}")
    try:
        conn = sqlite3.connect(f"file:{target}?mode=ro", uri=True)
        conn.execute("SELECT 1")
    except sqlite3.Error as exc:
        raise ConnectionFailed(f"cannot open {target} read-only: {exc}") from exc
    return conn


def table_checksums(path: str | Path) -> dict[str, str]:
    """Content hash per table over all rows in rowid order; any write to
    the data changes at least one digest."""
    conn = open_readonly(path)
    try:
        tables = [
            row[0]
            for row in conn.execute(
                "SELECT name FROM sqlite_master"
                " WHERE type = 'table' AND name NOT LIKE 'sqlite_%' ORDER BY name"
            )
        ]
        digests: dict[str, str] = {}
        for table in tables:
            digest = hashlib.sha256()
            quoted = '"' + table.replace('"', '""') + '"'
            for row in conn.execute(f"SELECT * FROM {quoted} ORDER BY rowid"):
                digest.update(repr(row).encode("utf-8"))
            digests[table] = digest.hexdigest()
        return digests
    finally:
        conn.close()
