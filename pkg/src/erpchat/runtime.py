"""Wires configuration into a running component graph."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from . import fixture
from .catalog import SchemaDocument, build_document, introspect, load_semantic
from .config import AppConfig
from .gateway import Gateway, HttpChatBackend, ScriptedBackend
from .orchestrator import Orchestrator
from .promptlib import PromptLibrary
from .sandbox import ReadOnlyExecutor
from .sqlagent import SqlAgent


@dataclass
class Runtime:
    config: AppConfig
    gateway: Gateway
    schema: SchemaDocument
    executor: ReadOnlyExecutor
    prompts: PromptLibrary
    orchestrator: Orchestrator
    sql_agent: SqlAgent


def build_schema_document(config: AppConfig) -> SchemaDocument:
    fixture.ensure_fixture(config.database_path)
    conn = fixture.open_readonly(config.database_path)
    try:
        tables, relationships = introspect(
            conn,
            sample_limit=config.sample_limit,
            sensitive_patterns=config.sensitive_patterns,
        )
    finally:
        conn.close()
    if config.semantic_path:
        semantic_text = Path(config.semantic_path).read_text("utf-8")
    else:
        semantic_text = fixture.semantic_markdown()
    semantic = load_semantic(semantic_text)
    return build_document(semantic, tables, relationships)


def build_backend(config: AppConfig):
    if config.backend.kind == "scripted":
        return ScriptedBackend.from_dir(config.backend.script_dir)
    return HttpChatBackend(config.backend.endpoint, config.backend.role_endpoints)


def build_runtime(config: AppConfig) -> Runtime:
    schema = build_schema_document(config)
    gateway = Gateway(build_backend(config), config.role_configs())
    prompts = PromptLibrary(config.prompt_dir)
    executor = ReadOnlyExecutor(
        config.database_path,
        preview_limit=config.preview_limit,
        statement_timeout_s=config.statement_timeout_s,
    )
    sql_agent = SqlAgent(gateway, executor, prompts, config.limits)
    orchestrator = Orchestrator(gateway, sql_agent, schema, prompts)
    return Runtime(
        config=config,
        gateway=gateway,
        schema=schema,
        executor=executor,
        prompts=prompts,
        orchestrator=orchestrator,
        sql_agent=sql_agent,
    )
