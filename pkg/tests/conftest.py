import pytest

from erpchat import fixture
from erpchat.catalog import build_document, introspect, load_semantic
from erpchat.gateway import Gateway, ScriptedBackend
from erpchat.orchestrator import Orchestrator
from erpchat.promptlib import PromptLibrary
from erpchat.sandbox import ReadOnlyExecutor
from erpchat.sqlagent import AgentLimits, SqlAgent


@pytest.fixture(scope="session")
def fixture_db(tmp_path_factory):
    path = tmp_path_factory.mktemp("db") / "erp.db"
    fixture.seed_fixture(path)
    return path


@pytest.fixture(scope="session")
def schema_doc(fixture_db):
    conn = fixture.open_readonly(fixture_db)
    try:
        tables, relationships = introspect(conn)
    finally:
        conn.close()
    semantic = load_semantic(fixture.semantic_markdown())
    return build_document(semantic, tables, relationships)


@pytest.fixture
def backend():
    return ScriptedBackend()


def build_stack(db_path, backend, schema, limits=None):
    """Wires a full agent stack around a scripted backend."""
    gateway = Gateway(backend, default_model="scripted")
    prompts = PromptLibrary()
    executor = ReadOnlyExecutor(str(db_path))
    agent = SqlAgent(gateway, executor, prompts, limits or AgentLimits())
    return Orchestrator(gateway, agent, schema, prompts)


@pytest.fixture
def orchestrator(fixture_db, backend, schema_doc):
    return build_stack(fixture_db, backend, schema_doc)


def assessment_proceed(intent: str) -> str:
    return (
        "```assessment\n"
        "decision: proceed\n"
        f"normalized_intent: {intent}\n"
        "reason: answerable from the schema\n"
        "```"
    )


def assessment_clarify(question: str) -> str:
    return (
        "```assessment\n"
        "decision: clarify\n"
        f"clarification_question: {question}\n"
        "reason: ambiguous\n"
        "```"
    )


def sql_reply(sql: str, prose: str = "Here is the query.") -> str:
    return f"{prose}\n```sql\n{sql}\n```"


APPROVED = "```verdict\ndecision: approved\n```"


def revise(category: str = "semantic", detail: str = "wrong join") -> str:
    return (
        "```verdict\n"
        "decision: revise\n"
        "issues:\n"
        f"  - category: {category}\n"
        f"    detail: {detail}\n"
        "```"
    )
